"""Tests for rollouts and the MPC loop"""

import numpy as np
import pytest

from trajinfo.config import default_planner_config
from trajinfo.core.control import (
    FixedFunctionModel,
    ModelPredictiveController,
    function_count,
    rollout,
    rollout_costs,
)
from trajinfo.core.cost_functions import GreedyCost
from trajinfo.core.environments import GroundTruthModel, make_env
from trajinfo.core.gp_model import GpPosterior, KernelHyperparams
from trajinfo.models import TransitionDataset


def _drift_up(states, actions):
    return states + actions


def _drift_down(states, actions):
    return states - actions


def _sum_of_next_states(states, actions, next_states):
    return np.sum(next_states, axis=(1, 2))


class TestRollout:
    """Open-loop rollouts over several functions"""

    def test_shape_and_start(self):
        start = np.array([0.5, -0.5])
        actions = np.ones((4, 3, 2))
        states = rollout([_drift_up, _drift_down], start, actions)
        assert states.shape == (2, 4, 4, 2)
        np.testing.assert_array_equal(states[:, :, 0], np.broadcast_to(start, (2, 4, 2)))
        np.testing.assert_allclose(states[0, 0, -1], start + 3.0)
        np.testing.assert_allclose(states[1, 0, -1], start - 3.0)

    def test_costs_are_averaged_over_functions(self):
        start = np.zeros(1)
        actions = np.random.default_rng(0).uniform(-1, 1, (5, 4, 1))
        both = rollout_costs([_drift_up, _drift_down], start, actions, _sum_of_next_states)
        up = rollout_costs([_drift_up], start, actions, _sum_of_next_states)
        down = rollout_costs([_drift_down], start, actions, _sum_of_next_states)
        np.testing.assert_allclose(both, 0.5 * (up + down))
        np.testing.assert_allclose(both, 0.0, atol=1e-12)


class TestFunctionCount:
    """Deterministic models plan with one function"""

    def test_ground_truth_uses_one_function(self):
        assert function_count(GroundTruthModel(make_env("pendulum")), 5) == 1

    def test_fixed_function_model(self):
        model = FixedFunctionModel(_drift_up)
        assert function_count(model, 5) == 1
        assert model.sample_functions(3, seed=0) == [_drift_up] * 3
        np.testing.assert_array_equal(model.predict_mean(np.ones((2, 1)), np.ones((2, 1))), np.full((2, 1), 2.0))

    def test_gp_posterior_uses_k_functions(self):
        dataset = TransitionDataset.empty(1, 1)
        posterior = GpPosterior(dataset, [KernelHyperparams(np.ones(2), 1.0, 0.01)])
        assert function_count(posterior, 5) == 5


class TestModelPredictiveController:
    """Closed- and open-loop episodes with the true dynamics"""

    def _episode(self, replan_period, seed=0):
        env = make_env("nonlinear_gain_1")
        config = default_planner_config("nonlinear_gain_1").model_copy(update={"replan_period": replan_period})
        controller = ModelPredictiveController(env.spec, config, k=5)
        return env, controller.run_episode(env, GroundTruthModel(env), GreedyCost(env), env.reset(0), seed)

    def test_closed_loop_executes_true_steps(self):
        env, result = self._episode(replan_period=1)
        trajectory = result.trajectory
        assert len(trajectory) == env.spec.horizon
        for state, action, next_state in zip(*trajectory.transitions()):
            np.testing.assert_allclose(next_state, env.step(state, action), rtol=0, atol=1e-12)
        assert result.planner_calls == env.spec.horizon

    @pytest.mark.parametrize("replan_period, calls", [(3, 4), (10, 1)])
    def test_planner_calls(self, replan_period, calls):
        _, result = self._episode(replan_period=replan_period)
        assert result.planner_calls == calls
        assert len(result.plan_costs) == calls

    def test_same_seed_same_episode(self):
        _, a = self._episode(replan_period=1, seed=4)
        _, b = self._episode(replan_period=1, seed=4)
        np.testing.assert_array_equal(a.trajectory.actions, b.trajectory.actions)

    def test_planning_beats_doing_nothing(self):
        _, result = self._episode(replan_period=1)
        # zero action holds (1.5, -1): ten steps of -3.25
        assert result.trajectory.total_return > -32.5
