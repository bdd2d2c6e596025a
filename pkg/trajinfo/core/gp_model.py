"""高斯过程动力学模型

说明：
- 每个状态维度一个独立 GP，回归目标是状态增量 Δs = s' − s（角度维度取环绕差）。
- 核函数为 SE-ARD；超参数在标准化空间用 L-BFGS-B（解析梯度）多起点最大化边际似然，再换算回原始单位。
- 周期维度以 (cos, sin) 作为输入特征，预测的下一状态会重新环绕到 [−π, π)。
- 后验函数采样使用随机傅里叶特征 + pathwise 更新，构造一次后逐点求值不再分解矩阵。
- 所有对象构造后不可变，可在并发 worker 间共享。
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

from trajinfo.config import GpConfig
from trajinfo.errors import HyperparameterFitError, NumericalError
from trajinfo.models import QuerySet, Trajectory, TransitionDataset
from trajinfo.utils.console import warn
from trajinfo.utils.numeric import derive_seed, make_rng, wrap_periodic

_FAILED_OBJECTIVE = 1e25
_CONSTANT_RTOL = 1e-12
MIN_FEATURES = 100


@dataclass(frozen=True)
class KernelHyperparams:
    """SE-ARD hyperparameters of one output dimension (original units)"""

    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float
    prior_mean: float = 0.0

    def __post_init__(self):
        lengthscales = np.array(self.lengthscales, dtype=float).reshape(-1)
        lengthscales.setflags(write=False)
        object.__setattr__(self, "lengthscales", lengthscales)
        if np.any(~np.isfinite(lengthscales)) or np.any(lengthscales <= 0):
            raise ValueError(f"Lengthscales must be positive, got {lengthscales}")
        if not self.signal_variance > 0 or not self.noise_variance > 0:
            raise ValueError(
                f"Variances must be positive, got signal={self.signal_variance}, noise={self.noise_variance}"
            )

    @classmethod
    def default(cls, input_dim: int, config: Optional[GpConfig] = None) -> "KernelHyperparams":
        config = config or GpConfig()
        return cls(
            lengthscales=np.full(input_dim, config.default_lengthscale),
            signal_variance=config.default_signal_variance,
            noise_variance=config.default_noise_variance,
        )


def se_ard_kernel(x1: np.ndarray, x2: np.ndarray, lengthscales: np.ndarray, signal_variance: float) -> np.ndarray:
    """k(x, x') = σ_f² exp(−½ Σ_d (x_d − x'_d)² / ℓ_d²)"""
    sq = cdist(x1 / lengthscales, x2 / lengthscales, "sqeuclidean")
    return signal_variance * np.exp(-0.5 * sq)


def robust_cholesky(matrix: np.ndarray, max_escalations: int = 3) -> np.ndarray:
    """Lower Cholesky factor with jitter escalation

    Tries the plain factorization first, then adds 1e-8·trace/n to the
    diagonal and multiplies that jitter by 10 up to ``max_escalations`` times.

    Raises:
        NumericalError: If every attempt fails
    """
    matrix = np.asarray(matrix, dtype=float)
    try:
        return cholesky(matrix, lower=True)
    except (LinAlgError, ValueError):
        pass

    n = matrix.shape[0]
    scale = abs(np.trace(matrix)) / n if n and np.isfinite(np.trace(matrix)) else 1.0
    jitter = 1e-8 * (scale if scale > 0 else 1.0)
    for _ in range(max_escalations + 1):
        try:
            return cholesky(matrix + jitter * np.eye(n), lower=True)
        except (LinAlgError, ValueError):
            jitter *= 10.0

    try:
        condition = float(np.linalg.cond(matrix))
    except LinAlgError:
        condition = float("inf")
    raise NumericalError(f"Matrix of size {n} is not positive definite after jitter escalation", condition)


def joint_entropy(covariance: np.ndarray) -> np.ndarray:
    """log|Σ| via Cholesky (Gaussian entropy without the ½ factor and constants)

    Accepts a single (h, h) matrix or a stack (..., h, h); returns a float or
    an array of the leading shape.
    """
    covariance = np.asarray(covariance, dtype=float)
    if covariance.ndim == 2:
        chol = robust_cholesky(covariance)
        return float(2.0 * np.sum(np.log(np.diag(chol))))

    try:
        chol = np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError:
        flat = covariance.reshape(-1, *covariance.shape[-2:])
        chol = np.stack([robust_cholesky(c) for c in flat]).reshape(covariance.shape)
    return 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1)


class OutputGp:
    """Exact GP for one output dimension with per-point observation noise"""

    def __init__(
        self,
        inputs: np.ndarray,
        targets: np.ndarray,
        hyperparams: KernelHyperparams,
        noise: Optional[np.ndarray] = None,
    ):
        self.inputs = np.asarray(inputs, dtype=float).reshape(len(targets), -1) if len(targets) else np.zeros(
            (0, len(hyperparams.lengthscales))
        )
        self.targets = np.asarray(targets, dtype=float).reshape(-1)
        self.hyperparams = hyperparams
        if noise is None:
            noise = np.full(len(self.targets), hyperparams.noise_variance)
        self.noise = np.asarray(noise, dtype=float).reshape(-1)

        self.cholesky: Optional[np.ndarray] = None
        self.alpha: Optional[np.ndarray] = None
        if len(self.targets):
            gram = self.kernel(self.inputs, self.inputs) + np.diag(self.noise)
            self.cholesky = robust_cholesky(gram)
            self.alpha = cho_solve((self.cholesky, True), self.targets - hyperparams.prior_mean)

    def __len__(self) -> int:
        return len(self.targets)

    def kernel(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return se_ard_kernel(x1, x2, self.hyperparams.lengthscales, self.hyperparams.signal_variance)

    def joint(self, query: np.ndarray, include_noise: bool = True) -> Tuple[np.ndarray, np.ndarray]:
        means, covs = self.joint_batch(np.asarray(query, dtype=float)[None], include_noise)
        return means[0], covs[0]

    def joint_batch(self, queries: np.ndarray, include_noise: bool = True) -> Tuple[np.ndarray, np.ndarray]:
        """Joint predictive mean (B, h) and covariance (B, h, h) of B query sets"""
        hp = self.hyperparams
        count, h, dim = queries.shape
        scaled = queries / hp.lengthscales
        sq = np.sum((scaled[:, :, None, :] - scaled[:, None, :, :]) ** 2, axis=-1)
        covs = hp.signal_variance * np.exp(-0.5 * sq)
        means = np.full((count, h), hp.prior_mean)

        if len(self):
            flat = queries.reshape(count * h, dim)
            cross = self.kernel(self.inputs, flat)
            means = means + (cross.T @ self.alpha).reshape(count, h)
            v = solve_triangular(self.cholesky, cross, lower=True)
            v = v.reshape(len(self), count, h).transpose(1, 0, 2)
            covs = covs - np.matmul(v.transpose(0, 2, 1), v)

        covs = 0.5 * (covs + covs.transpose(0, 2, 1))
        if include_noise:
            covs = covs + hp.noise_variance * np.eye(h)
        return means, covs

    def marginal(self, inputs: np.ndarray, include_noise: bool = True) -> Tuple[np.ndarray, np.ndarray]:
        """Pointwise predictive mean and variance at (M, D) inputs"""
        hp = self.hyperparams
        means = np.full(len(inputs), hp.prior_mean)
        variances = np.full(len(inputs), hp.signal_variance)
        if len(self):
            cross = self.kernel(self.inputs, inputs)
            means = means + cross.T @ self.alpha
            v = solve_triangular(self.cholesky, cross, lower=True)
            variances = variances - np.sum(v * v, axis=0)
        variances = np.maximum(variances, 0.0)
        if include_noise:
            variances = variances + hp.noise_variance
        return means, variances

    def condition(self, inputs: np.ndarray, targets: np.ndarray, noise: np.ndarray) -> "OutputGp":
        """New GP with extra observations (refactorized from scratch)"""
        return OutputGp(
            np.vstack([self.inputs, inputs]),
            np.concatenate([self.targets, targets]),
            self.hyperparams,
            np.concatenate([self.noise, noise]),
        )


def _negative_mll(log_params: np.ndarray, inputs: np.ndarray, targets: np.ndarray) -> Tuple[float, np.ndarray]:
    """Negative log marginal likelihood and its gradient w.r.t. log-hyperparameters

    ``log_params`` = [log ℓ_1..ℓ_D, log σ_f², log σ_n²]; the prior mean is zero.
    """
    dim = inputs.shape[1]
    params = np.exp(log_params)
    lengthscales, signal, noise = params[:dim], params[dim], params[dim + 1]
    n = len(targets)
    try:
        k_f = se_ard_kernel(inputs, inputs, lengthscales, signal)
        chol = cholesky(k_f + noise * np.eye(n), lower=True)
    except (LinAlgError, ValueError, FloatingPointError):
        return _FAILED_OBJECTIVE, np.zeros_like(log_params)

    alpha = cho_solve((chol, True), targets)
    value = 0.5 * targets @ alpha + np.sum(np.log(np.diag(chol))) + 0.5 * n * np.log(2.0 * np.pi)
    if not np.isfinite(value):
        return _FAILED_OBJECTIVE, np.zeros_like(log_params)

    weight = np.outer(alpha, alpha) - cho_solve((chol, True), np.eye(n))
    grad = np.empty_like(log_params)
    for d in range(dim):
        sq_diff = (inputs[:, d, None] - inputs[None, :, d]) ** 2 / lengthscales[d] ** 2
        grad[d] = -0.5 * np.sum(weight * k_f * sq_diff)
    grad[dim] = -0.5 * np.sum(weight * k_f)
    grad[dim + 1] = -0.5 * noise * np.trace(weight)
    return float(value), grad


def log_marginal_likelihood(inputs: np.ndarray, targets: np.ndarray, hyperparams: KernelHyperparams) -> float:
    """Log marginal likelihood of raw-unit data under ``hyperparams``"""
    inputs = np.asarray(inputs, dtype=float)
    centered = np.asarray(targets, dtype=float).reshape(-1) - hyperparams.prior_mean
    log_params = np.log(
        np.concatenate([hyperparams.lengthscales, [hyperparams.signal_variance, hyperparams.noise_variance]])
    )
    value, _ = _negative_mll(log_params, inputs, centered)
    return -value


def fit_kernel_hyperparameters(
    inputs: np.ndarray,
    targets: np.ndarray,
    restarts: int = 3,
    seed: int = 0,
    config: Optional[GpConfig] = None,
) -> KernelHyperparams:
    """Type-II maximum likelihood for a single-output SE-ARD GP

    Inputs and targets are standardized to zero mean and unit variance; the
    target mean becomes the constant prior mean. The first restart starts at
    the configured defaults, later ones at seeded log-uniform draws inside the
    bounds. Every initialization is itself a candidate, so the returned
    likelihood is never below any initialization's.

    Args:
        inputs: (N, D) input matrix
        targets: (N,) targets
        restarts: Number of optimizer starts
        seed: Seed for the random initializations
        config: GP configuration (bounds, defaults)

    Returns:
        Hyperparameters in original units

    Raises:
        HyperparameterFitError: If no candidate has a finite likelihood
    """
    config = config or GpConfig()
    inputs = np.asarray(inputs, dtype=float)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    dim = inputs.shape[1]

    if len(targets) < 2:
        warn(f"Hyperparameter fit needs at least 2 points, got {len(targets)}; using defaults")
        return KernelHyperparams.default(dim, config)
    if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
        raise HyperparameterFitError("Hyperparameter fit received non-finite inputs or targets")

    # spreads at rounding level count as constant
    x_scale = inputs.std(axis=0)
    x_scale[x_scale < _CONSTANT_RTOL * np.maximum(1.0, np.abs(inputs.mean(axis=0)))] = 1.0
    y_mean = float(targets.mean())
    y_scale = float(targets.std())
    if y_scale < _CONSTANT_RTOL * max(1.0, abs(y_mean)):
        y_scale = 1.0
    x_std = inputs / x_scale
    y_std = (targets - y_mean) / y_scale

    x_range = np.ptp(x_std, axis=0)
    x_range[x_range < _CONSTANT_RTOL] = 1.0
    low_ls, high_ls = config.lengthscale_bounds
    low_var, high_var = config.variance_bounds
    bounds = [(np.log(low_ls * r), np.log(high_ls * r)) for r in x_range]
    bounds += [(np.log(low_var), np.log(high_var))] * 2
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])

    rng = make_rng(seed)
    starts = [
        np.clip(
            np.log(
                np.concatenate(
                    [
                        np.full(dim, config.default_lengthscale),
                        [config.default_signal_variance, config.default_noise_variance],
                    ]
                )
            ),
            lower,
            upper,
        )
    ]
    for _ in range(restarts - 1):
        starts.append(rng.uniform(lower, upper))

    candidates: List[Tuple[float, np.ndarray]] = []
    for start in starts:
        value, _ = _negative_mll(start, x_std, y_std)
        candidates.append((value, start))
        try:
            result = minimize(
                _negative_mll,
                start,
                args=(x_std, y_std),
                jac=True,
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": config.optimizer_maxiter},
            )
            candidates.append((float(result.fun), np.asarray(result.x)))
        except (ValueError, FloatingPointError, LinAlgError):
            continue

    finite = [(v, p) for v, p in candidates if np.isfinite(v) and v < _FAILED_OBJECTIVE]
    if not finite:
        raise HyperparameterFitError(
            f"Marginal likelihood failed at all {len(candidates)} candidates "
            f"(N={len(targets)}, D={dim}); the data may contain conflicting duplicate inputs"
        )
    best = min(finite, key=lambda item: item[0])[1]
    params = np.exp(best)
    return KernelHyperparams(
        lengthscales=params[:dim] * x_scale,
        signal_variance=float(params[dim] * y_scale**2),
        noise_variance=float(params[dim + 1] * y_scale**2),
        prior_mean=y_mean,
    )


def featurize(states: np.ndarray, actions: np.ndarray, periodic_dims: Sequence[int] = ()) -> np.ndarray:
    """GP inputs: non-periodic state dims, cos/sin of periodic dims, then actions"""
    states = np.asarray(states, dtype=float)
    actions = np.asarray(actions, dtype=float)
    if not periodic_dims:
        return np.concatenate([states, actions], axis=-1)
    periodic = list(periodic_dims)
    linear = [d for d in range(states.shape[-1]) if d not in periodic]
    angles = states[..., periodic]
    return np.concatenate([states[..., linear], np.cos(angles), np.sin(angles), actions], axis=-1)


def delta_targets(states: np.ndarray, next_states: np.ndarray, periodic_dims: Sequence[int] = ()) -> np.ndarray:
    return wrap_periodic(np.asarray(next_states, dtype=float) - np.asarray(states, dtype=float), periodic_dims)


def fit_hyperparameters(
    dataset: TransitionDataset,
    restarts: int = 3,
    seed: int = 0,
    periodic_dims: Sequence[int] = (),
    config: Optional[GpConfig] = None,
) -> List[KernelHyperparams]:
    """Fit one set of hyperparameters per state dimension

    With fewer than 2 triples the fit is rejected and defaults are returned
    with a warning.
    """
    config = config or GpConfig()
    input_dim = dataset.state_dim + len(periodic_dims) + dataset.action_dim
    if len(dataset) < 2:
        warn(f"Dataset has {len(dataset)} triple(s); hyperparameter fit skipped, using defaults")
        return [KernelHyperparams.default(input_dim, config) for _ in range(dataset.state_dim)]

    inputs = featurize(dataset.states, dataset.actions, periodic_dims)
    deltas = delta_targets(dataset.states, dataset.next_states, periodic_dims)
    return [
        fit_kernel_hyperparameters(inputs, deltas[:, d], restarts, derive_seed(seed, d), config)
        for d in range(dataset.state_dim)
    ]


class GpPosterior:
    """Posterior P(T | D) over transition functions, one GP per state dimension

    Immutable: ``extend`` and ``condition_noiseless`` return new posteriors.
    Means returned by the joint methods are in delta space; ``predict_mean``
    and sampled functions return next states.
    """

    def __init__(
        self,
        dataset: TransitionDataset,
        hyperparams: Sequence[KernelHyperparams],
        periodic_dims: Sequence[int] = (),
        config: Optional[GpConfig] = None,
        outputs: Optional[List[OutputGp]] = None,
    ):
        if len(hyperparams) != dataset.state_dim:
            raise ValueError(f"Need {dataset.state_dim} hyperparameter sets, got {len(hyperparams)}")
        self.dataset = dataset
        self.hyperparams = list(hyperparams)
        self.periodic_dims = tuple(periodic_dims)
        self.config = config or GpConfig()

        if outputs is None:
            inputs = featurize(dataset.states, dataset.actions, self.periodic_dims)
            deltas = delta_targets(dataset.states, dataset.next_states, self.periodic_dims)
            outputs = [OutputGp(inputs, deltas[:, d], hp) for d, hp in enumerate(self.hyperparams)]
        self.outputs = outputs

    @classmethod
    def fit(
        cls,
        dataset: TransitionDataset,
        periodic_dims: Sequence[int] = (),
        config: Optional[GpConfig] = None,
        seed: int = 0,
    ) -> "GpPosterior":
        """Fit hyperparameters on ``dataset`` and condition on it"""
        config = config or GpConfig()
        hyperparams = fit_hyperparameters(dataset, config.restarts, seed, periodic_dims, config)
        return cls(dataset, hyperparams, periodic_dims, config)

    @property
    def state_dim(self) -> int:
        return self.dataset.state_dim

    @property
    def action_dim(self) -> int:
        return self.dataset.action_dim

    @property
    def num_points(self) -> int:
        """Conditioning points, including noiseless trajectory points"""
        return len(self.outputs[0]) if self.outputs else 0

    def extend(self, states, actions, next_states) -> "GpPosterior":
        """Posterior on the grown dataset with the same hyperparameters"""
        dataset = self.dataset.extend(states, actions, next_states)
        return GpPosterior(dataset, self.hyperparams, self.periodic_dims, self.config)

    def featurize(self, states, actions) -> np.ndarray:
        return featurize(states, actions, self.periodic_dims)

    def posterior_joint(self, query: QuerySet, include_noise: bool = True) -> List[Tuple[np.ndarray, np.ndarray]]:
        """Per output dimension: (mean of size |X|, covariance |X|×|X|)"""
        inputs = self.featurize(query.states, query.actions)
        return [gp.joint(inputs, include_noise) for gp in self.outputs]

    def posterior_joint_batch(
        self, states: np.ndarray, actions: np.ndarray, include_noise: bool = True
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Joint posteriors of B query sets

        Args:
            states: (B, h, d_s)
            actions: (B, h, d_a)

        Returns:
            means (B, d_s, h) and covariances (B, d_s, h, h)
        """
        inputs = self.featurize(states, actions)
        results = [gp.joint_batch(inputs, include_noise) for gp in self.outputs]
        means = np.stack([r[0] for r in results], axis=1)
        covs = np.stack([r[1] for r in results], axis=1)
        return means, covs

    def marginal_variance(self, states: np.ndarray, actions: np.ndarray, include_noise: bool = True) -> np.ndarray:
        """Pointwise predictive variances (M, d_s)"""
        inputs = self.featurize(states, actions)
        return np.stack([gp.marginal(inputs, include_noise)[1] for gp in self.outputs], axis=-1)

    def predict_mean(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Posterior-mean next states (..., d_s)"""
        states = np.asarray(states, dtype=float)
        actions = np.asarray(actions, dtype=float)
        flat_states = states.reshape(-1, self.state_dim)
        inputs = self.featurize(flat_states, actions.reshape(-1, self.action_dim))
        deltas = np.stack([gp.marginal(inputs, include_noise=False)[0] for gp in self.outputs], axis=-1)
        return wrap_periodic(flat_states + deltas, self.periodic_dims).reshape(states.shape)

    def condition_noiseless(self, trajectory: Trajectory) -> "GpPosterior":
        """Treat the trajectory's transitions as (near) noiseless observations

        Each output gets jitter ε = cond_jitter_scale·σ_f² instead of its noise
        variance. Points within ``dedup_tolerance`` of an existing input (or of
        an earlier trajectory point) are skipped.
        """
        if len(trajectory) == 0:
            return self
        states, actions, next_states = trajectory.transitions()
        inputs = self.featurize(states, actions)
        deltas = delta_targets(states, next_states, self.periodic_dims)

        keep = np.ones(len(inputs), dtype=bool)
        existing = self.outputs[0].inputs
        tolerance = self.config.dedup_tolerance
        if len(existing):
            keep &= cdist(inputs, existing).min(axis=1) > tolerance
        for i in range(1, len(inputs)):
            if keep[i] and np.any(keep[:i]):
                if cdist(inputs[i : i + 1], inputs[:i][keep[:i]]).min() <= tolerance:
                    keep[i] = False
        if not np.any(keep):
            return self

        inputs, deltas = inputs[keep], deltas[keep]
        outputs = [
            gp.condition(
                inputs,
                deltas[:, d],
                np.full(len(inputs), self.config.cond_jitter_scale * gp.hyperparams.signal_variance),
            )
            for d, gp in enumerate(self.outputs)
        ]
        return GpPosterior(self.dataset, self.hyperparams, self.periodic_dims, self.config, outputs)

    def sample_functions(self, count: int, seed: int) -> List["PosteriorFunctionSample"]:
        return [
            sample_posterior_function(self, self.config.num_features, derive_seed(seed, i)) for i in range(count)
        ]


class PosteriorFunctionSample:
    """One deterministic dynamics function drawn from a GP posterior

    f_d(x) = m_d + φ_d(x)ᵀw_d + k_d(x, X) v_d, with random Fourier features
    φ_d(x) = sqrt(2σ²/B)·cos(Ω_d x + b_d) and pathwise-update coefficients
    v_d = (K_d + Σ_d)⁻¹ (y_d − m_d − Φ_d w_d − ε_d).
    """

    def __init__(self, posterior: GpPosterior, frequencies, phases, weights, updates):
        self.periodic_dims = posterior.periodic_dims
        self.state_dim = posterior.state_dim
        self.action_dim = posterior.action_dim
        self._outputs = posterior.outputs
        self.frequencies = frequencies
        self.phases = phases
        self.weights = weights
        self.updates = updates

    def _features(self, d: int, inputs: np.ndarray) -> np.ndarray:
        hp = self._outputs[d].hyperparams
        scale = np.sqrt(2.0 * hp.signal_variance / len(self.phases[d]))
        return scale * np.cos(inputs @ self.frequencies[d].T + self.phases[d])

    def deltas(self, inputs: np.ndarray) -> np.ndarray:
        """Sampled deltas at (M, D) featurized inputs"""
        columns = []
        for d, gp in enumerate(self._outputs):
            value = gp.hyperparams.prior_mean + self._features(d, inputs) @ self.weights[d]
            if len(gp):
                value = value + gp.kernel(inputs, gp.inputs) @ self.updates[d]
            columns.append(value)
        return np.stack(columns, axis=-1)

    def __call__(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Next states for (..., d_s) states and (..., d_a) actions"""
        states = np.asarray(states, dtype=float)
        flat_states = states.reshape(-1, self.state_dim)
        flat_actions = np.asarray(actions, dtype=float).reshape(-1, self.action_dim)
        inputs = featurize(flat_states, flat_actions, self.periodic_dims)
        next_states = flat_states + self.deltas(inputs)
        return wrap_periodic(next_states, self.periodic_dims).reshape(states.shape)


def sample_posterior_function(posterior: GpPosterior, num_features: int, seed: int) -> PosteriorFunctionSample:
    """Draw one posterior dynamics function (RFF prior + pathwise update)"""
    if num_features < MIN_FEATURES:
        raise ValueError(f"num_features must be at least {MIN_FEATURES}, got {num_features}")
    rng = make_rng(seed)
    frequencies, phases, weights, updates = [], [], [], []
    for gp in posterior.outputs:
        hp = gp.hyperparams
        dim = len(hp.lengthscales)
        omega = rng.standard_normal((num_features, dim)) / hp.lengthscales
        phase = rng.uniform(0.0, 2.0 * np.pi, num_features)
        weight = rng.standard_normal(num_features)
        update = np.zeros(0)
        if len(gp):
            prior_at_data = np.sqrt(2.0 * hp.signal_variance / num_features) * np.cos(gp.inputs @ omega.T + phase)
            noise = rng.standard_normal(len(gp)) * np.sqrt(gp.noise)
            residual = gp.targets - hp.prior_mean - prior_at_data @ weight - noise
            update = cho_solve((gp.cholesky, True), residual)
        frequencies.append(omega)
        phases.append(phase)
        weights.append(weight)
        updates.append(update)
    return PosteriorFunctionSample(posterior, frequencies, phases, weights, updates)


def posterior_joint(
    dataset: TransitionDataset,
    hyperparams: Sequence[KernelHyperparams],
    query: QuerySet,
    periodic_dims: Sequence[int] = (),
    include_noise: bool = True,
) -> List[Tuple[np.ndarray, np.ndarray]]:
    return GpPosterior(dataset, hyperparams, periodic_dims).posterior_joint(query, include_noise)


def condition_noiseless(posterior: GpPosterior, trajectory: Trajectory) -> GpPosterior:
    return posterior.condition_noiseless(trajectory)
