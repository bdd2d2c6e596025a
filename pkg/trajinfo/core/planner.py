"""iCEM 动作序列优化

说明：
- 采样噪声为 1/f^β 有色噪声（频域合成，Timmer & Koenig 方法），β=3 时相邻时刻高度相关。
- 种群按 p·γ^(−i) 衰减；开启 fixed_batch 时每轮都用新样本补齐到 p，代价函数看到的批大小恒定。
- 每轮保留 ⌈ξ·e⌉ 个精英进入下一轮；重规划时精英按执行步数左移并以末尾动作补齐。
- 分布更新：均值/标准差取精英统计量，带动量 0.1，方差下限 1e-4·(动作区间)²。
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from numpy.fft import irfft, rfftfreq

from trajinfo.config import PlannerConfig
from trajinfo.errors import PlannerError
from trajinfo.utils.numeric import make_rng

CostEvaluator = Callable[[np.ndarray], np.ndarray]


def colored_noise(
    exponent: float,
    horizon: int,
    dims: int,
    count: int,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Gaussian noise with power spectrum ∝ 1/f^exponent along time

    Normalized to unit expected variance. The lowest finite frequency 1/h
    also scales the DC bin.

    Args:
        exponent: Spectral exponent β (0 gives white noise)
        horizon: Sequence length h (≥ 2)
        dims: Action dimensions
        count: Number of sequences
        seed: Seed used when ``rng`` is not given
        rng: Generator to draw from

    Returns:
        Array of shape (count, horizon, dims)
    """
    if horizon < 2:
        raise ValueError(f"Colored noise needs horizon >= 2, got {horizon}")
    if rng is None:
        rng = make_rng(0 if seed is None else seed)

    freqs = rfftfreq(horizon)
    scale = freqs.copy()
    scale[0] = scale[1]
    scale = scale ** (-exponent / 2.0)

    w = scale[1:].copy()
    w[-1] *= (1 + (horizon % 2)) / 2.0
    sigma = 2.0 * np.sqrt(np.sum(w**2)) / horizon

    size = (count, dims, len(freqs))
    real = rng.normal(scale=scale, size=size)
    imag = rng.normal(scale=scale, size=size)
    if horizon % 2 == 0:
        imag[..., -1] = 0.0
        real[..., -1] *= np.sqrt(2.0)
    imag[..., 0] = 0.0
    real[..., 0] *= np.sqrt(2.0)

    series = irfft(real + 1j * imag, n=horizon, axis=-1) / sigma
    return np.ascontiguousarray(series.transpose(0, 2, 1))


def shift_elites(elites: np.ndarray, shift: int) -> np.ndarray:
    """Drop the first ``shift`` actions and pad with the final action"""
    elites = np.asarray(elites, dtype=float)
    if shift <= 0:
        return elites.copy()
    horizon = elites.shape[1]
    shift = min(shift, horizon)
    tail = np.repeat(elites[:, -1:, :], shift, axis=1)
    return np.concatenate([elites[:, shift:, :], tail], axis=1)


@dataclass
class PlanResult:
    """Outcome of one iCEM optimization"""

    actions: np.ndarray
    cost: float
    mean: np.ndarray
    elites: np.ndarray
    history: List[float] = field(default_factory=list)
    nan_count: int = 0
    evaluations: int = 0


class ICEMPlanner:
    """Improved cross-entropy method over action sequences"""

    def __init__(self, config: PlannerConfig, action_low, action_high):
        self.config = config
        self.action_low = np.asarray(action_low, dtype=float)
        self.action_high = np.asarray(action_high, dtype=float)
        self.action_dim = len(self.action_low)

    @property
    def action_range(self) -> np.ndarray:
        return self.action_high - self.action_low

    def midpoint(self, horizon: Optional[int] = None) -> np.ndarray:
        horizon = horizon or self.config.horizon
        return np.tile(0.5 * (self.action_low + self.action_high), (horizon, 1))

    def _noise(self, count: int, horizon: int, rng: np.random.Generator) -> np.ndarray:
        if count <= 0:
            return np.zeros((0, horizon, self.action_dim))
        if horizon < 2:
            return rng.standard_normal((count, horizon, self.action_dim))
        return colored_noise(self.config.noise_exponent, horizon, self.action_dim, count, rng=rng)

    def population_size(self, iteration: int) -> int:
        """Decayed population of an iteration (before fixed-batch padding)"""
        cfg = self.config
        size = max(int(cfg.population * cfg.population_decay ** (-iteration)), 2 * cfg.elites)
        return min(size, cfg.population) if cfg.fixed_batch else size

    def optimize(
        self,
        cost_evaluator: CostEvaluator,
        mean_init: Optional[np.ndarray] = None,
        seed: int = 0,
        cached_elites: Optional[np.ndarray] = None,
        horizon: Optional[int] = None,
    ) -> PlanResult:
        """Minimize ``cost_evaluator`` over action sequences

        Args:
            cost_evaluator: Maps (n, h, d_a) candidates to (n,) costs
            mean_init: Initial sampling mean (h, d_a); defaults to the bounds midpoint
            seed: Seed of this optimization
            cached_elites: Already shifted elites of the previous plan
            horizon: Plan length; defaults to the configured horizon

        Returns:
            PlanResult with the lowest-cost sequence seen in any iteration

        Raises:
            PlannerError: If every candidate of an iteration has a NaN cost
        """
        cfg = self.config
        horizon = horizon or cfg.horizon
        rng = make_rng(seed)

        mean = self.midpoint(horizon) if mean_init is None else np.clip(
            np.asarray(mean_init, dtype=float), self.action_low, self.action_high
        )
        std = np.tile(cfg.init_std_fraction * self.action_range, (horizon, 1))
        std_floor = np.sqrt(cfg.variance_floor) * self.action_range
        keep_count = math.ceil(cfg.elite_cache_fraction * cfg.elites)

        previous = None if cached_elites is None else np.asarray(cached_elites, dtype=float)
        best_actions, best_cost = None, np.inf
        elites = None
        history: List[float] = []
        nan_count = 0
        evaluations = 0

        for iteration in range(cfg.iterations):
            last = iteration == cfg.iterations - 1
            carried = previous[:keep_count] if previous is not None and keep_count else np.zeros((0, horizon, self.action_dim))
            batch = cfg.population if cfg.fixed_batch else self.population_size(iteration)
            # decayed population, padded with fresh samples up to the fixed batch
            fresh_count = max(batch - len(carried) - int(last), 0)

            noise = self._noise(fresh_count, horizon, rng)
            fresh = np.clip(mean + std * noise, self.action_low, self.action_high)
            parts = [carried, fresh] + ([mean[None]] if last else [])
            candidates = np.concatenate(parts, axis=0)

            costs = np.asarray(cost_evaluator(candidates), dtype=float).reshape(-1)
            evaluations += len(candidates)
            nan_mask = np.isnan(costs)
            if nan_mask.all():
                raise PlannerError(f"All {len(costs)} candidates returned NaN cost at iteration {iteration}")
            nan_count += int(nan_mask.sum())
            costs = np.where(nan_mask, np.inf, costs)

            order = np.argsort(costs, kind="stable")[: cfg.elites]
            elites = candidates[order]
            if costs[order[0]] < best_cost or best_actions is None:
                best_cost = float(costs[order[0]])
                best_actions = candidates[order[0]].copy()
            history.append(best_cost)

            mean = cfg.momentum * mean + (1.0 - cfg.momentum) * elites.mean(axis=0)
            std = cfg.momentum * std + (1.0 - cfg.momentum) * elites.std(axis=0)
            std = np.maximum(std, std_floor)
            previous = elites

        return PlanResult(
            actions=best_actions,
            cost=best_cost,
            mean=mean,
            elites=elites,
            history=history,
            nan_count=nan_count,
            evaluations=evaluations,
        )


def icem_optimize(
    cost_evaluator: CostEvaluator,
    config: PlannerConfig,
    action_low,
    action_high,
    mean_init: Optional[np.ndarray] = None,
    seed: int = 0,
    cached_elites: Optional[np.ndarray] = None,
) -> PlanResult:
    return ICEMPlanner(config, action_low, action_high).optimize(cost_evaluator, mean_init, seed, cached_elites)
