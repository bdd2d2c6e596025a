"""模型预测控制（MPC）与轨迹展开

`ModelPredictiveController` 是所有控制循环共用的规划路径：
- 给定一组动力学函数（GP 后验样本、单个后验函数或真实动力学）与代价函数，
  对候选动作序列逐一展开，代价取 k 个函数上的平均，交给 iCEM 最小化。
- 重规划之间保存精英与均值，并按已执行的步数平移（warm start）。
- 开环问题就是 replan_period ≥ H 的特例：整条序列只规划一次。
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from trajinfo.config import PlannerConfig
from trajinfo.core.environments import EnvSpec, Environment
from trajinfo.core.planner import ICEMPlanner, PlanResult, shift_elites
from trajinfo.models import Trajectory
from trajinfo.utils.numeric import derive_seed

DynamicsFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
PlanningCost = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


class DynamicsModel(Protocol):
    """Anything that can hand out dynamics functions to plan with"""

    periodic_dims: Tuple[int, ...]

    def sample_functions(self, count: int, seed: int) -> List[DynamicsFunction]:
        ...

    def predict_mean(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        ...


@dataclass
class FixedFunctionModel:
    """Singleton posterior δ(f): every sample is the same function"""

    function: DynamicsFunction
    periodic_dims: Tuple[int, ...] = ()
    deterministic: bool = True

    def sample_functions(self, count: int, seed: int) -> List[DynamicsFunction]:
        return [self.function] * count

    def predict_mean(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.function(states, actions)


def function_count(model: "DynamicsModel", k: int) -> int:
    """k samples, or one when every sample is the same function"""
    return 1 if getattr(model, "deterministic", False) else k


def rollout(functions: Sequence[DynamicsFunction], start: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Roll candidate action sequences out on each function

    Args:
        functions: k dynamics functions
        start: Start state (d_s,)
        actions: Candidates (n, h, d_a)

    Returns:
        States of shape (k, n, h + 1, d_s); index 0 along time is ``start``
    """
    count, horizon, _ = actions.shape
    start = np.asarray(start, dtype=float)
    trajectories = np.empty((len(functions), count, horizon + 1, start.shape[-1]))
    for j, function in enumerate(functions):
        states = np.tile(start, (count, 1))
        trajectories[j, :, 0] = states
        for t in range(horizon):
            states = function(states, actions[:, t])
            trajectories[j, :, t + 1] = states
    return trajectories


def rollout_costs(
    functions: Sequence[DynamicsFunction], start: np.ndarray, actions: np.ndarray, cost: PlanningCost
) -> np.ndarray:
    """Mean cost of each candidate over the k function rollouts"""
    states = rollout(functions, start, actions)
    k, n, horizon_plus_one, state_dim = states.shape
    horizon = horizon_plus_one - 1
    tiled = np.broadcast_to(actions, (k,) + actions.shape)
    values = cost(
        states[:, :, :-1].reshape(k * n, horizon, state_dim),
        tiled.reshape(k * n, horizon, actions.shape[-1]),
        states[:, :, 1:].reshape(k * n, horizon, state_dim),
    )
    return np.asarray(values, dtype=float).reshape(k, n).mean(axis=0)


@dataclass
class EpisodeResult:
    """A finished episode plus what the planner looked at"""

    trajectory: Trajectory
    planned_states: np.ndarray
    planned_actions: np.ndarray
    plan_costs: List[float] = field(default_factory=list)
    planner_calls: int = 0


class ModelPredictiveController:
    """Plan with iCEM, execute ``replan_period`` actions, warm-start the next plan"""

    def __init__(self, spec: EnvSpec, config: PlannerConfig, k: int = 1):
        self.spec = spec
        self.config = config
        self.k = k
        self.planner = ICEMPlanner(config, spec.action_low, spec.action_high)
        self._mean: Optional[np.ndarray] = None
        self._elites: Optional[np.ndarray] = None

    def reset(self) -> None:
        """Forget the warm start (new episode)"""
        self._mean = None
        self._elites = None

    def plan(
        self,
        functions: Sequence[DynamicsFunction],
        state: np.ndarray,
        cost: PlanningCost,
        seed: int,
        horizon: Optional[int] = None,
    ) -> PlanResult:
        """One iCEM optimization from ``state`` against the given functions"""

        def evaluate(candidates: np.ndarray) -> np.ndarray:
            return rollout_costs(functions, state, candidates, cost)

        result = self.planner.optimize(evaluate, self._mean, seed, self._elites, horizon)
        self._mean = result.mean
        self._elites = result.elites
        return result

    def advance(self, executed: int) -> None:
        """Shift the warm start past ``executed`` actions"""
        if self._mean is not None:
            self._mean = shift_elites(self._mean[None], executed)[0]
        if self._elites is not None:
            self._elites = shift_elites(self._elites, executed)

    def run_episode(
        self,
        env: Environment,
        model: DynamicsModel,
        cost: PlanningCost,
        start: np.ndarray,
        seed: int,
        step: Optional[DynamicsFunction] = None,
        horizon: Optional[int] = None,
    ) -> EpisodeResult:
        """Closed-loop MPC for a whole episode with a fixed model

        Args:
            env: Supplies the reward, bounds and episode length
            model: Planning model (never updated during the episode)
            cost: Planning cost
            start: Start state
            seed: Episode seed
            step: Transition to execute; defaults to the true environment
            horizon: Episode length; defaults to the environment horizon

        Returns:
            EpisodeResult with the executed trajectory
        """
        self.reset()
        episode_length = horizon or self.spec.horizon
        execute = step or (lambda s, a: env.step_batch(s, a))
        states = [np.asarray(start, dtype=float)]
        actions: List[np.ndarray] = []
        planned_states, planned_actions, plan_costs = [], [], []

        t = 0
        while t < episode_length:
            functions = model.sample_functions(function_count(model, self.k), derive_seed(seed, t))
            plan_horizon = self.config.horizon
            result = self.plan(functions, states[-1], cost, derive_seed(seed, t, 1), plan_horizon)
            plan_costs.append(result.cost)
            preview = rollout(functions[:1], states[-1], result.actions[None])[0, 0]
            planned_states.append(preview[:-1])
            planned_actions.append(result.actions)

            executed = min(self.config.replan_period, episode_length - t, plan_horizon)
            for action in result.actions[:executed]:
                next_state = np.asarray(execute(states[-1][None], action[None]))[0]
                states.append(next_state)
                actions.append(action)
            self.advance(executed)
            t += executed

        state_array = np.array(states)
        action_array = np.array(actions)
        rewards = env.reward_batch(state_array[:-1], action_array, state_array[1:])
        return EpisodeResult(
            trajectory=Trajectory(state_array, action_array, rewards),
            planned_states=np.concatenate(planned_states, axis=0),
            planned_actions=np.concatenate(planned_actions, axis=0),
            plan_costs=plan_costs,
            planner_calls=len(plan_costs),
        )
