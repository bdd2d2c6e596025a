"""Tests for the benchmark environments"""

import numpy as np
import pytest

from trajinfo.config import ENVIRONMENT_NAMES
from trajinfo.core.environments import GroundTruthModel, make_env
from trajinfo.errors import InvalidStateError
from trajinfo.utils.numeric import make_rng


@pytest.mark.parametrize("name", ENVIRONMENT_NAMES)
class TestEnvironmentContract:
    """Behaviour every environment shares"""

    def test_step_is_deterministic_and_matches_query(self, name):
        env = make_env(name)
        state = env.reset(0)
        action = np.full(env.spec.action_dim, 0.3)
        assert np.array_equal(env.step(state, action), env.step(state, action))
        assert np.array_equal(env.step(state, action), env.query(state, action))

    def test_actions_are_clipped(self, name):
        env = make_env(name)
        state = env.reset(1)
        assert np.array_equal(env.step(state, env.spec.action_high * 100), env.step(state, env.spec.action_high))

    def test_nan_state_rejected(self, name):
        env = make_env(name)
        state = np.full(env.spec.state_dim, np.nan)
        with pytest.raises(InvalidStateError):
            env.step(state, np.zeros(env.spec.action_dim))

    def test_step_batch_keeps_leading_shape(self, name):
        env = make_env(name)
        rng = make_rng(0)
        states, actions = env.sample_state_actions(rng, 12)
        next_states = env.step_batch(states.reshape(3, 4, -1), actions.reshape(3, 4, -1))
        assert next_states.shape == (3, 4, env.spec.state_dim)
        np.testing.assert_array_equal(next_states.reshape(12, -1), env.step_batch(states, actions))

    def test_reset_is_seeded(self, name):
        env = make_env(name)
        np.testing.assert_array_equal(env.reset(3), env.reset(3))

    def test_uniform_samples_within_bounds(self, name):
        env = make_env(name)
        states, actions = env.sample_state_actions(make_rng(1), 200)
        assert np.all(states >= env.spec.state_low) and np.all(states <= env.spec.state_high)
        assert np.all(actions >= env.spec.action_low) and np.all(actions <= env.spec.action_high)

    def test_ground_truth_model_is_the_step(self, name):
        env = make_env(name)
        model = GroundTruthModel(env)
        states, actions = env.sample_state_actions(make_rng(2), 5)
        [function] = model.sample_functions(1, seed=0)
        np.testing.assert_array_equal(function(states, actions), env.step_batch(states, actions))
        np.testing.assert_array_equal(model.predict_mean(states, actions), env.step_batch(states, actions))


def test_horizons():
    assert [make_env(n).spec.horizon for n in ENVIRONMENT_NAMES] == [200, 100, 20, 10, 10]


def test_unknown_environment():
    with pytest.raises(ValueError):
        make_env("reacher")


class TestPendulum:
    """Pendulum specifics"""

    def test_upright_rest_is_fixed_point(self):
        env = make_env("pendulum")
        next_state = env.step(np.zeros(2), np.zeros(1))
        np.testing.assert_array_equal(next_state, np.zeros(2))
        assert env.reward(np.zeros(2), np.zeros(1), next_state) == 0.0

    def test_angle_is_wrapped(self):
        env = make_env("pendulum")
        next_state = env.step(np.array([np.pi - 0.01, 8.0]), np.array([2.0]))
        assert -np.pi <= next_state[0] < np.pi

    def test_speed_is_limited(self):
        env = make_env("pendulum")
        next_state = env.step(np.array([1.0, 8.0]), np.array([2.0]))
        assert abs(next_state[1]) <= 8.0

    def test_random_starts_differ(self):
        env = make_env("pendulum")
        assert not np.array_equal(env.reset(0), env.reset(1))

    def test_start_angles_cover_the_circle(self):
        env = make_env("pendulum")
        angles = np.array([env.reset(seed)[0] for seed in range(1000)])
        assert np.all((angles >= -np.pi) & (angles < np.pi))
        counts, _ = np.histogram(angles, bins=10, range=(-np.pi, np.pi))
        assert counts.min() >= 60
        assert counts.max() <= 140

    @pytest.mark.parametrize("torque", [2.0, -2.0])
    def test_torque_from_hanging_sets_spin_direction(self, torque):
        env = make_env("pendulum")
        next_state = env.step(np.array([np.pi, 0.0]), np.array([torque]))
        assert np.sign(next_state[1]) == np.sign(torque)


class TestCartpole:
    """Cart-pole specifics"""

    def test_reward_upright_versus_hanging(self):
        env = make_env("cartpole")
        upright = np.zeros(4)
        hanging = np.array([0.0, 0.0, np.pi, 0.0])
        assert env.reward_batch(upright, np.zeros(1), upright) == pytest.approx(-1.0 / (1.0 + np.exp(2.5)))
        assert env.reward_batch(hanging, np.zeros(1), hanging) < -0.99

    def test_start_hangs_down(self):
        env = make_env("cartpole")
        start = env.reset(0)
        assert abs(abs(start[2]) - np.pi) <= 0.05 + 1e-12
        assert np.all(np.abs(start[[0, 1, 3]]) <= 0.05)

    @staticmethod
    def _energy(env, state):
        x_dot, theta, theta_dot = state[1], state[2], state[3]
        m, l = env.pole_mass, env.half_length
        kinetic = (
            0.5 * (env.cart_mass + m) * x_dot**2
            + m * l * x_dot * theta_dot * np.cos(theta)
            + 0.5 * (4.0 / 3.0) * m * l**2 * theta_dot**2
        )
        return kinetic + m * env.gravity * l * np.cos(theta)

    def test_unforced_swing_conserves_energy(self):
        # small swing around hanging; semi-implicit Euler drifts more at large amplitude
        env = make_env("cartpole")
        state = np.array([0.0, 0.0, np.pi - 0.1, 0.0])
        initial = self._energy(env, state)
        for _ in range(50):
            state = env.step(state, np.zeros(1))
            assert abs(self._energy(env, state) - initial) < 1e-3


class TestLavaPath:
    """Lava path specifics"""

    def test_lava_and_bridge(self):
        env = make_env("lava_path")
        assert env.in_lava(np.array([0.0, 0.0, 0.0, 0.0]))
        assert not env.in_lava(np.array([0.0, 0.5, 0.0, 0.0]))
        assert not env.in_lava(np.array([-1.2, 0.0, 0.0, 0.0]))

    def test_lava_penalty(self):
        env = make_env("lava_path")
        inside = np.array([0.0, 0.0, 0.0, 0.0])
        outside = np.array([0.0, 0.5, 0.0, 0.0])
        gap = env.reward_batch(outside, np.zeros(2), outside) - env.reward_batch(inside, np.zeros(2), inside)
        assert gap > 499.0

    def test_fixed_start(self):
        env = make_env("lava_path")
        assert env.spec.fixed_start
        np.testing.assert_array_equal(env.reset(0), env.reset(99))
        np.testing.assert_array_equal(env.reset(0), [-1.2, 0.0, 0.0, 0.0])

    def test_velocity_is_limited(self):
        env = make_env("lava_path")
        next_state = env.step(np.array([0.0, 1.0, 2.0, 2.0]), np.array([5.0, 5.0]))
        assert np.all(np.abs(next_state[2:]) <= 2.0)


class TestNonlinearGain:
    """Nonlinear-gain regulation problems"""

    @pytest.mark.parametrize("name", ["nonlinear_gain_1", "nonlinear_gain_2"])
    def test_zero_action_holds_state(self, name):
        env = make_env(name)
        start = env.reset(0)
        np.testing.assert_allclose(env.step(start, np.zeros(2)), start)

    def test_gains_differ(self):
        action = np.array([0.5, -0.5])
        start = np.zeros(2)
        first = make_env("nonlinear_gain_1").step(start, action)
        second = make_env("nonlinear_gain_2").step(start, action)
        assert not np.allclose(first, second)
