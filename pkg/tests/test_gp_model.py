"""Tests for the GP dynamics model"""

import numpy as np
import pytest

from trajinfo.config import GpConfig
from trajinfo.core.gp_model import (
    GpPosterior,
    KernelHyperparams,
    fit_hyperparameters,
    fit_kernel_hyperparameters,
    featurize,
    joint_entropy,
    log_marginal_likelihood,
    posterior_joint,
    robust_cholesky,
    sample_posterior_function,
    se_ard_kernel,
)
from trajinfo.errors import HyperparameterFitError, NumericalError
from trajinfo.models import QuerySet, Trajectory, TransitionDataset


def _random_case(rng):
    state_dim = int(rng.integers(1, 3))
    action_dim = int(rng.integers(1, 3))
    size = int(rng.integers(0, 7))
    states = rng.uniform(-2, 2, (size, state_dim))
    actions = rng.uniform(-1, 1, (size, action_dim))
    next_states = states + rng.normal(0, 0.5, (size, state_dim))
    dataset = TransitionDataset(states, actions, next_states)
    hyperparams = [
        KernelHyperparams(
            lengthscales=rng.uniform(0.5, 2.0, state_dim + action_dim),
            signal_variance=float(rng.uniform(0.5, 2.0)),
            noise_variance=float(rng.uniform(0.01, 0.2)),
            prior_mean=float(rng.normal()),
        )
        for _ in range(state_dim)
    ]
    h = int(rng.integers(1, 5))
    query = QuerySet(rng.uniform(-2, 2, (h, state_dim)), rng.uniform(-1, 1, (h, action_dim)))
    return dataset, hyperparams, query


def _oracle(dataset, hp, query, d):
    """Posterior by explicit matrix inversion"""
    x = np.concatenate([dataset.states, dataset.actions], axis=1)
    xq = np.concatenate([query.states, query.actions], axis=1)
    kqq = se_ard_kernel(xq, xq, hp.lengthscales, hp.signal_variance)
    if len(dataset) == 0:
        return np.full(len(xq), hp.prior_mean), kqq + hp.noise_variance * np.eye(len(xq))
    y = dataset.next_states[:, d] - dataset.states[:, d]
    k = se_ard_kernel(x, x, hp.lengthscales, hp.signal_variance) + hp.noise_variance * np.eye(len(x))
    kx = se_ard_kernel(x, xq, hp.lengthscales, hp.signal_variance)
    inverse = np.linalg.inv(k)
    mean = hp.prior_mean + kx.T @ inverse @ (y - hp.prior_mean)
    cov = kqq - kx.T @ inverse @ kx + hp.noise_variance * np.eye(len(xq))
    return mean, cov


def _sine_dataset():
    x = np.array([-1.5, -0.5, 0.0, 0.7, 1.4])
    states = x[:, None]
    actions = np.zeros((5, 1))
    return TransitionDataset(states, actions, states + np.sin(x)[:, None])


class TestPosteriorJoint:
    """Joint posterior against a direct-inversion oracle"""

    def test_matches_inversion_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            dataset, hyperparams, query = _random_case(rng)
            result = posterior_joint(dataset, hyperparams, query)
            for d, (mean, cov) in enumerate(result):
                expected_mean, expected_cov = _oracle(dataset, hyperparams[d], query, d)
                np.testing.assert_allclose(mean, expected_mean, atol=1e-8, rtol=0)
                np.testing.assert_allclose(cov, expected_cov, atol=1e-7, rtol=0)

    def test_empty_dataset_is_prior(self):
        dataset = TransitionDataset.empty(1, 1)
        hp = KernelHyperparams(np.array([1.0, 1.0]), 1.5, 0.1)
        query = QuerySet(np.array([[0.0], [0.5]]), np.array([[0.0], [0.0]]))
        [(mean, cov)] = posterior_joint(dataset, [hp], query)
        np.testing.assert_allclose(mean, 0.0)
        np.testing.assert_allclose(np.diag(cov), 1.6)

    def test_batch_matches_single_sets(self):
        rng = np.random.default_rng(1)
        dataset = TransitionDataset(rng.normal(size=(6, 2)), rng.normal(size=(6, 1)), rng.normal(size=(6, 2)))
        hyperparams = [KernelHyperparams.default(3) for _ in range(2)]
        posterior = GpPosterior(dataset, hyperparams)
        states = rng.normal(size=(4, 3, 2))
        actions = rng.normal(size=(4, 3, 1))
        means, covs = posterior.posterior_joint_batch(states, actions)
        assert means.shape == (4, 2, 3)
        assert covs.shape == (4, 2, 3, 3)
        for b in range(4):
            single = posterior.posterior_joint(QuerySet(states[b], actions[b]))
            for d in range(2):
                np.testing.assert_allclose(means[b, d], single[d][0], atol=1e-12)
                np.testing.assert_allclose(covs[b, d], single[d][1], atol=1e-12)

    def test_more_data_shrinks_covariance(self):
        rng = np.random.default_rng(2)
        dataset = TransitionDataset(rng.normal(size=(4, 1)), rng.normal(size=(4, 1)), rng.normal(size=(4, 1)))
        posterior = GpPosterior(dataset, [KernelHyperparams.default(2)])
        grown = posterior.extend(rng.normal(size=(3, 1)), rng.normal(size=(3, 1)), rng.normal(size=(3, 1)))
        query = QuerySet(rng.normal(size=(5, 1)), rng.normal(size=(5, 1)))
        before = posterior.posterior_joint(query)[0][1]
        after = grown.posterior_joint(query)[0][1]
        assert np.linalg.eigvalsh(before - after).min() >= -1e-10


class TestHyperparameterFit:
    """Type-II maximum likelihood"""

    def test_too_few_points_returns_defaults(self, capsys):
        dataset = TransitionDataset(np.zeros((1, 2)), np.zeros((1, 1)), np.ones((1, 2)))
        hyperparams = fit_hyperparameters(dataset, restarts=2, seed=0)
        assert len(hyperparams) == 2
        defaults = KernelHyperparams.default(3)
        np.testing.assert_array_equal(hyperparams[0].lengthscales, defaults.lengthscales)
        assert hyperparams[0].noise_variance == defaults.noise_variance
        assert "Warning" in capsys.readouterr().err

    def test_non_finite_targets_raise(self):
        with pytest.raises(HyperparameterFitError):
            fit_kernel_hyperparameters(np.array([[0.0], [1.0]]), np.array([0.0, np.nan]))

    def test_fit_never_worse_than_default_start(self):
        rng = np.random.default_rng(3)
        inputs = rng.uniform(-2, 2, (25, 2))
        targets = np.sin(2.0 * inputs[:, 0]) + 0.1 * inputs[:, 1] + 0.05 * rng.normal(size=25)
        config = GpConfig()
        fitted = fit_kernel_hyperparameters(inputs, targets, restarts=3, seed=0, config=config)

        x_scale = inputs.std(axis=0)
        y_scale = targets.std()
        start = KernelHyperparams(
            lengthscales=config.default_lengthscale * x_scale,
            signal_variance=config.default_signal_variance * y_scale**2,
            noise_variance=config.default_noise_variance * y_scale**2,
            prior_mean=float(targets.mean()),
        )
        assert log_marginal_likelihood(inputs, targets, fitted) >= log_marginal_likelihood(inputs, targets, start) - 1e-8
        assert fitted.signal_variance > 0
        assert fitted.noise_variance > 0
        assert np.all(fitted.lengthscales > 0)

    def test_fit_is_deterministic(self):
        rng = np.random.default_rng(4)
        inputs = rng.uniform(-1, 1, (12, 2))
        targets = inputs[:, 0] ** 2
        a = fit_kernel_hyperparameters(inputs, targets, restarts=3, seed=5)
        b = fit_kernel_hyperparameters(inputs, targets, restarts=3, seed=5)
        np.testing.assert_array_equal(a.lengthscales, b.lengthscales)
        assert a.noise_variance == b.noise_variance

    def test_sine_fit_has_sensible_lengthscale(self):
        rng = np.random.default_rng(0)
        inputs = rng.uniform(-3, 3, (20, 1))
        targets = np.sin(inputs[:, 0]) + 1e-3 * rng.normal(size=20)
        fitted = fit_kernel_hyperparameters(inputs, targets, restarts=3, seed=0)
        assert 0.3 <= fitted.lengthscales[0] <= 3.0
        assert fitted.noise_variance < 0.1 * fitted.signal_variance

    @pytest.mark.parametrize("spread", [0, 1, 2])
    def test_constant_targets_hit_the_variance_floor(self, spread):
        # spread > 0 leaves targets that differ only by rounding
        inputs = np.linspace(-1, 1, 12)[:, None]
        targets = np.full(12, 0.2)
        for _ in range(spread):
            targets[::3] = np.nextafter(targets[::3], 1.0)
        config = GpConfig()
        fitted = fit_kernel_hyperparameters(inputs, targets, restarts=2, seed=0, config=config)
        low = config.variance_bounds[0]
        assert fitted.signal_variance == pytest.approx(low, rel=1e-3)
        assert fitted.noise_variance == pytest.approx(low, rel=1e-3)
        assert fitted.prior_mean == pytest.approx(0.2)

    def test_outputs_are_fitted_independently(self):
        rng = np.random.default_rng(6)
        states = rng.uniform(-1, 1, (8, 2))
        actions = rng.uniform(-1, 1, (8, 1))
        next_states = states + np.column_stack([np.sin(2 * states[:, 0]), np.cos(states[:, 1]) * actions[:, 0]])
        shuffled = next_states.copy()
        shuffled[:, 1] = states[:, 1] + (next_states - states)[rng.permutation(8), 1]

        config = GpConfig(restarts=2)
        original = GpPosterior.fit(TransitionDataset(states, actions, next_states), config=config)
        permuted = GpPosterior.fit(TransitionDataset(states, actions, shuffled), config=config)
        query_s, query_a = rng.uniform(-1, 1, (5, 2)), rng.uniform(-1, 1, (5, 1))
        np.testing.assert_allclose(
            original.predict_mean(query_s, query_a)[:, 0], permuted.predict_mean(query_s, query_a)[:, 0], atol=1e-12
        )

    def test_constant_targets_predict_constant(self):
        states = np.linspace(-1, 1, 6)[:, None]
        actions = np.zeros((6, 1))
        dataset = TransitionDataset(states, actions, states + 0.5)
        posterior = GpPosterior.fit(dataset, config=GpConfig(restarts=2))
        prediction = posterior.predict_mean(np.array([[0.3], [3.0]]), np.zeros((2, 1)))
        np.testing.assert_allclose(prediction[:, 0] - np.array([0.3, 3.0]), 0.5, atol=1e-8)


class TestNumerics:
    """Cholesky and entropy helpers"""

    def test_robust_cholesky_handles_singular_psd(self):
        chol = robust_cholesky(np.ones((3, 3)))
        np.testing.assert_allclose(chol @ chol.T, np.ones((3, 3)), atol=1e-5)

    def test_robust_cholesky_reports_condition_number(self):
        with pytest.raises(NumericalError, match="condition number"):
            robust_cholesky(-np.eye(3))

    def test_joint_entropy_is_log_det(self):
        a = np.array([[2.0, 0.3], [0.3, 1.0]])
        assert joint_entropy(a) == pytest.approx(np.linalg.slogdet(a)[1])
        stack = np.stack([a, 2 * a])
        np.testing.assert_allclose(joint_entropy(stack), [np.linalg.slogdet(m)[1] for m in stack])


class TestNoiselessConditioning:
    """Conditioning on sampled trajectories"""

    def _posterior(self):
        dataset = TransitionDataset(np.array([[-2.0]]), np.array([[0.0]]), np.array([[-1.5]]))
        return GpPosterior(dataset, [KernelHyperparams(np.array([1.0, 1.0]), 1.0, 0.01)])

    def test_variance_collapses_at_conditioned_points(self):
        posterior = self._posterior()
        states = np.array([[0.0], [1.0], [2.0]])
        trajectory = Trajectory(states, np.array([[0.0], [0.0]]), np.zeros(2))
        conditioned = posterior.condition_noiseless(trajectory)
        assert conditioned.num_points == 3
        variance = conditioned.marginal_variance(states[:-1], np.zeros((2, 1)), include_noise=False)
        assert np.all(variance < 1e-5)
        # the dataset itself is untouched
        assert len(conditioned.dataset) == 1

    def test_conditioning_shrinks_joint_log_det(self):
        posterior = GpPosterior(_sine_dataset(), [KernelHyperparams(np.array([0.8, 1.0]), 1.0, 0.01)])
        trajectory = Trajectory(
            np.array([[2.0], [2.3], [2.6], [2.9]]), np.array([[0.1], [0.2], [0.3]]), np.zeros(3)
        )
        query = QuerySet(np.linspace(1.5, 3.0, 5)[:, None], np.full((5, 1), 0.2))

        def log_det(p):
            return sum(joint_entropy(cov) for _, cov in p.posterior_joint(query))

        assert log_det(posterior.condition_noiseless(trajectory)) < log_det(posterior) - 1e-3

    def test_empty_trajectory_returns_same_posterior(self):
        posterior = self._posterior()
        assert posterior.condition_noiseless(Trajectory.empty(np.zeros(1), 1)) is posterior

    def test_duplicate_inputs_are_skipped(self):
        posterior = self._posterior()
        trajectory = Trajectory(np.array([[-2.0], [-1.5]]), np.array([[0.0]]), np.zeros(1))
        assert posterior.condition_noiseless(trajectory).num_points == 1


class TestFunctionSampling:
    """Posterior function samples"""

    def test_sample_statistics_match_posterior(self):
        dataset = _sine_dataset()
        hp = KernelHyperparams(np.array([0.8, 1.0]), 1.0, 0.01)
        posterior = GpPosterior(dataset, [hp])
        test_states = np.linspace(-3.0, 3.0, 10)[:, None]
        test_actions = np.zeros((10, 1))

        count = 2000
        draws = np.stack(
            [sample_posterior_function(posterior, 512, seed)(test_states, test_actions)[:, 0] for seed in range(count)]
        )
        mean = posterior.predict_mean(test_states, test_actions)[:, 0]
        variance = posterior.marginal_variance(test_states, test_actions, include_noise=False)[:, 0]

        mean_se = np.sqrt(variance / count)
        var_se = variance * np.sqrt(2.0 / (count - 1))
        assert np.all(np.abs(draws.mean(axis=0) - mean) <= 4 * mean_se + 1e-6)
        assert np.all(np.abs(draws.var(axis=0, ddof=1) - variance) <= 4 * var_se + 1e-6)

    def test_prior_samples_have_signal_variance(self):
        posterior = GpPosterior(TransitionDataset.empty(1, 1), [KernelHyperparams(np.array([1.0, 1.0]), 2.0, 0.01)])
        count = 4000
        values = np.array(
            [sample_posterior_function(posterior, 256, seed)(np.zeros((1, 1)), np.zeros((1, 1)))[0, 0] for seed in range(count)]
        )
        assert abs(values.mean()) <= 4 * np.sqrt(2.0 / count)
        assert abs(values.var(ddof=1) - 2.0) <= 4 * 2.0 * np.sqrt(2.0 / (count - 1))

    def test_samples_pass_through_noiseless_training_points(self):
        dataset = _sine_dataset()
        posterior = GpPosterior(dataset, [KernelHyperparams(np.array([0.5, 1.0]), 1.0, 1e-8)])
        state, action = dataset.states[2:3], dataset.actions[2:3]
        count = 1000
        draws = np.array([sample_posterior_function(posterior, 256, seed)(state, action)[0, 0] for seed in range(count)])
        standard_error = draws.std(ddof=1) / np.sqrt(count)
        assert abs(draws.mean() - dataset.next_states[2, 0]) <= 3 * standard_error + 1e-9

    def test_too_few_features_rejected(self):
        posterior = GpPosterior(_sine_dataset(), [KernelHyperparams.default(2)])
        with pytest.raises(ValueError, match="at least 100"):
            sample_posterior_function(posterior, 50, 0)

    def test_sample_is_deterministic_per_seed(self):
        posterior = GpPosterior(_sine_dataset(), [KernelHyperparams.default(2)])
        states = np.array([[0.2], [-0.4]])
        actions = np.zeros((2, 1))
        a = sample_posterior_function(posterior, 128, 11)
        b = sample_posterior_function(posterior, 128, 11)
        np.testing.assert_array_equal(a(states, actions), b(states, actions))
        # a sample is a fixed function
        np.testing.assert_array_equal(a(states, actions), a(states, actions))

    def test_periodic_outputs_are_wrapped(self):
        rng = np.random.default_rng(5)
        states = np.column_stack([rng.uniform(-np.pi, np.pi, 6), rng.uniform(-1, 1, 6)])
        dataset = TransitionDataset(states, rng.uniform(-1, 1, (6, 1)), states + 0.3)
        hyperparams = [KernelHyperparams.default(4) for _ in range(2)]
        posterior = GpPosterior(dataset, hyperparams, periodic_dims=(0,))
        query = np.array([[3.1, 0.0], [-3.1, 0.5]])
        for values in (posterior.predict_mean(query, np.zeros((2, 1))), posterior.sample_functions(1, 0)[0](query, np.zeros((2, 1)))):
            assert np.all(values[:, 0] >= -np.pi)
            assert np.all(values[:, 0] < np.pi)


def test_featurize_expands_periodic_dims():
    states = np.array([[0.5, np.pi / 2]])
    actions = np.array([[0.1]])
    features = featurize(states, actions, periodic_dims=(1,))
    np.testing.assert_allclose(features, [[0.5, 0.0, 1.0, 0.1]], atol=1e-12)


def test_hyperparams_reject_non_positive_values():
    with pytest.raises(ValueError):
        KernelHyperparams(np.array([1.0, 0.0]), 1.0, 0.1)
    with pytest.raises(ValueError):
        KernelHyperparams(np.array([1.0]), 1.0, 0.0)
