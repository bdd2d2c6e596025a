"""规划代价函数

代价名称（配置中按名称选择）：
- greedy          C_g  = −R(τ)
- explore_joint   C_e  联合熵版本：−Σ_d log|Σ_d(X|D)|
- explore_summed  C_e  逐点版本：−Σ_i Σ_d log σ²_d(x_i|D)
- tip             C_τ* = (1/nm)·Σ_ij Σ_d log|Σ_d(X|D∪τ*_ij)| − Σ_d log|Σ_d(X|D)|（≤ 0）
- tip_summed      对每个点单独计算 tip 再求和

所有代价都对一批查询集向量化：输入 (B, h, d_s) 状态、(B, h, d_a) 动作、(B, h, d_s) 下一状态，输出 (B,)。
熵统一省略 ½ 因子与常数项；预测协方差对角线包含观测噪声。
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from trajinfo.config import PlannerConfig
from trajinfo.core.control import FixedFunctionModel, ModelPredictiveController
from trajinfo.core.environments import Environment
from trajinfo.core.gp_model import GpPosterior, joint_entropy, sample_posterior_function
from trajinfo.errors import NumericalError, PlannerError, StaleSamplesError
from trajinfo.models import QuerySet, Trajectory
from trajinfo.utils.console import warn
from trajinfo.utils.numeric import derive_seed

COST_NAMES = ("greedy", "explore_joint", "explore_summed", "tip", "tip_summed")


@dataclass(frozen=True)
class OptimalTrajectorySamples:
    """τ*_ij for m start states × n posterior functions, tied to a dataset snapshot"""

    trajectories: tuple
    snapshot_id: str
    m: int
    n: int
    dropped: int = 0

    def __len__(self) -> int:
        return len(self.trajectories)

    def pooled_states(self) -> np.ndarray:
        """All visited (non-terminal) states across the samples"""
        parts = [t.states[:-1] for t in self.trajectories if len(t)]
        return np.concatenate(parts, axis=0) if parts else np.zeros((0, 0))


def greedy_cost(trajectory: Trajectory) -> float:
    return -trajectory.total_return


def _joint_log_dets(posterior: GpPosterior, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Σ_d log|Σ_d| per query set, shape (B,)"""
    _, covs = posterior.posterior_joint_batch(states, actions)
    return np.sum(joint_entropy(covs), axis=-1)


def pointwise_log_variances(posterior: GpPosterior, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """Σ_d log σ²_d per point, shape (B, h)"""
    count, horizon = states.shape[:2]
    singles_s = states.reshape(count * horizon, 1, states.shape[-1])
    singles_a = actions.reshape(count * horizon, 1, actions.shape[-1])
    return _joint_log_dets(posterior, singles_s, singles_a).reshape(count, horizon)


class GreedyCost:
    """Negative model-predicted return"""

    name = "greedy"

    def __init__(self, env: Environment):
        self.env = env

    def __call__(self, states, actions, next_states) -> np.ndarray:
        return -np.sum(self.env.reward_batch(states, actions, next_states), axis=-1)


class JointExplorationCost:
    """Negative joint predictive entropy of the query set (DIP)"""

    name = "explore_joint"

    def __init__(self, posterior: GpPosterior):
        self.posterior = posterior

    def __call__(self, states, actions, next_states=None) -> np.ndarray:
        return -_joint_log_dets(self.posterior, states, actions)


class SummedExplorationCost:
    """Negative sum of pointwise predictive entropies (sDIP)"""

    name = "explore_summed"

    def __init__(self, posterior: GpPosterior):
        self.posterior = posterior

    def __call__(self, states, actions, next_states=None) -> np.ndarray:
        return -np.sum(pointwise_log_variances(self.posterior, states, actions), axis=-1)


class TrajectoryInformationCost:
    """Negative joint EIG about τ* (TIP)

    The conditioned posteriors D ∪ τ*_ij are built once; every candidate batch
    scored by this object sees the same samples.
    """

    name = "tip"

    def __init__(self, posterior: GpPosterior, samples: OptimalTrajectorySamples):
        if samples.snapshot_id != posterior.dataset.snapshot_id:
            raise StaleSamplesError(
                f"Optimal-trajectory samples were drawn for dataset {samples.snapshot_id}, "
                f"posterior is on {posterior.dataset.snapshot_id}"
            )
        self.posterior = posterior
        self.samples = samples
        self.conditioned: List[GpPosterior] = [posterior.condition_noiseless(t) for t in samples.trajectories]

    def __call__(self, states, actions, next_states=None) -> np.ndarray:
        if not self.conditioned:
            return np.zeros(len(states))
        base = _joint_log_dets(self.posterior, states, actions)
        gaps = [_joint_log_dets(p, states, actions) - base for p in self.conditioned]
        return np.mean(gaps, axis=0)

    def pointwise_information(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """EIG_τ* of individual points, shape (M,) for (M, d_s) / (M, d_a) inputs"""
        states = np.asarray(states, dtype=float)[:, None, :]
        actions = np.asarray(actions, dtype=float)[:, None, :]
        if not self.conditioned:
            return np.zeros(len(states))
        base = _joint_log_dets(self.posterior, states, actions)
        gaps = [_joint_log_dets(p, states, actions) - base for p in self.conditioned]
        return -np.mean(gaps, axis=0)


class SummedTrajectoryInformationCost(TrajectoryInformationCost):
    """Sum of singleton TIP costs (sTIP)"""

    name = "tip_summed"

    def __call__(self, states, actions, next_states=None) -> np.ndarray:
        count, horizon = states.shape[:2]
        values = -self.pointwise_information(states.reshape(count * horizon, -1), actions.reshape(count * horizon, -1))
        return values.reshape(count, horizon).sum(axis=-1)


def build_cost(
    name: str,
    env: Environment,
    posterior: Optional[GpPosterior] = None,
    samples: Optional[OptimalTrajectorySamples] = None,
):
    """Construct a planning cost by name"""
    if name == "greedy":
        return GreedyCost(env)
    if posterior is None:
        raise ValueError(f"Cost '{name}' needs a GP posterior")
    if name == "explore_joint":
        return JointExplorationCost(posterior)
    if name == "explore_summed":
        return SummedExplorationCost(posterior)
    if name in ("tip", "tip_summed"):
        if samples is None:
            raise ValueError(f"Cost '{name}' needs optimal-trajectory samples")
        cls = TrajectoryInformationCost if name == "tip" else SummedTrajectoryInformationCost
        return cls(posterior, samples)
    raise ValueError(f"Unknown cost: {name}. Choose from {', '.join(COST_NAMES)}")


def _query_arrays(query: QuerySet):
    return query.states[None], query.actions[None]


def explore_cost_joint(query: QuerySet, posterior: GpPosterior) -> float:
    return float(JointExplorationCost(posterior)(*_query_arrays(query))[0])


def explore_cost_summed(query: QuerySet, posterior: GpPosterior) -> float:
    return float(SummedExplorationCost(posterior)(*_query_arrays(query))[0])


def tip_cost(query: QuerySet, posterior: GpPosterior, samples: OptimalTrajectorySamples) -> float:
    return float(TrajectoryInformationCost(posterior, samples)(*_query_arrays(query))[0])


def tip_cost_summed(query: QuerySet, posterior: GpPosterior, samples: OptimalTrajectorySamples) -> float:
    return float(SummedTrajectoryInformationCost(posterior, samples)(*_query_arrays(query))[0])


def sample_optimal_trajectories(
    posterior: GpPosterior,
    env: Environment,
    planner_config: PlannerConfig,
    m: int = 1,
    n: int = 15,
    seed: int = 0,
) -> OptimalTrajectorySamples:
    """Greedy MPC on n posterior function samples from each of m start states

    A cell whose planning fails is retried once with a fresh seed and then
    dropped with a warning.
    """
    if m < 1 or n < 1:
        raise ValueError(f"m and n must be positive, got m={m}, n={n}")
    controller = ModelPredictiveController(env.spec, planner_config, k=1)
    cost = GreedyCost(env)
    trajectories: List[Trajectory] = []
    dropped = 0

    def sample_cell(i: int, j: int, attempt: int) -> Trajectory:
        cell_seed = derive_seed(seed, i, j, attempt)
        function = sample_posterior_function(posterior, posterior.config.num_features, cell_seed)
        start = env.reset(derive_seed(seed, i))
        result = controller.run_episode(
            env,
            FixedFunctionModel(function, posterior.periodic_dims),
            cost,
            start,
            derive_seed(cell_seed, 7),
            step=function,
        )
        return result.trajectory

    for i in range(m):
        for j in range(n):
            for attempt in range(2):
                try:
                    trajectories.append(sample_cell(i, j, attempt))
                    break
                except (PlannerError, NumericalError, FloatingPointError) as e:
                    if attempt == 1:
                        warn(f"Dropping optimal-trajectory cell ({i}, {j}): {e}")
                        dropped += 1

    if not trajectories:
        warn("Every optimal-trajectory cell failed; information costs will be zero")
    return OptimalTrajectorySamples(
        trajectories=tuple(trajectories),
        snapshot_id=posterior.dataset.snapshot_id,
        m=m,
        n=n,
        dropped=dropped,
    )
