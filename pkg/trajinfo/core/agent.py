"""智能体控制循环

三种训练模式：
- closed_loop：贝叶斯 MPC。每次重规划都从当前后验抽 k 个函数，按配置的代价规划，执行 replan_period 步。
- open_loop：每个 trial 只规划一次整条 H 步序列并全部执行。
- tqrl：任意点查询。每轮在候选集上计算逐点采集函数（EIG_τ* 或预测熵），查询 argmax。

缓存约定：
- τ* 样本与超参数在每个 episode / trial 开始时刷新（TQRL 为每 tqrl_eval_every 次查询）。
- TIP 代价始终在抽取 τ* 时的后验上计算（快照一致）；rollout 用的后验函数取自最新数据。
- 评估只用 greedy 代价，不向数据集写入任何转移；设置 eval_every 时按转移数评估（episode 内也会重新拟合）。
"""

import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple, TypeVar

import numpy as np

from trajinfo.config import AgentConfig, GpConfig, PlannerConfig
from trajinfo.core.control import DynamicsModel, EpisodeResult, ModelPredictiveController, function_count
from trajinfo.core.cost_functions import (
    GreedyCost,
    OptimalTrajectorySamples,
    TrajectoryInformationCost,
    pointwise_log_variances,
    build_cost,
    sample_optimal_trajectories,
)
from trajinfo.core.environments import Environment, GroundTruthModel
from trajinfo.core.gp_model import GpPosterior, KernelHyperparams, fit_hyperparameters
from trajinfo.errors import HyperparameterFitError, NumericalError, PlannerError
from trajinfo.models import EvalRecord, RunTranscript, StepRecord, TransitionDataset
from trajinfo.utils.console import log, warn
from trajinfo.utils.numeric import derive_seed, make_rng, wrap_periodic

T = TypeVar("T")

_RECOVERABLE = (NumericalError, PlannerError, HyperparameterFitError, np.linalg.LinAlgError, FloatingPointError)


@dataclass(frozen=True)
class AlgorithmSpec:
    """How an algorithm collects data"""

    mode: str
    cost: str
    oracle: bool = False


ALGORITHMS: Dict[str, AlgorithmSpec] = {
    "tip": AlgorithmSpec("closed_loop", "tip"),
    "stip": AlgorithmSpec("closed_loop", "tip_summed"),
    "dip": AlgorithmSpec("closed_loop", "explore_joint"),
    "sdip": AlgorithmSpec("closed_loop", "explore_summed"),
    "mpc": AlgorithmSpec("closed_loop", "greedy"),
    "otip": AlgorithmSpec("open_loop", "tip"),
    "ompc": AlgorithmSpec("open_loop", "greedy"),
    "odip": AlgorithmSpec("open_loop", "explore_joint"),
    "barl": AlgorithmSpec("tqrl", "eig_tau"),
    "eig_t": AlgorithmSpec("tqrl", "entropy"),
    "mpc_groundtruth": AlgorithmSpec("closed_loop", "greedy", oracle=True),
}


class RunAborted(RuntimeError):
    """A step failed twice; the run stops with a partial transcript"""


def _retry(action: Callable[[int], T], label: str, seed: int) -> T:
    """Run ``action(seed)``; on a numerical failure retry once with a fresh seed"""
    try:
        return action(seed)
    except _RECOVERABLE as e:
        warn(f"{label} failed ({e}); retrying with a fresh seed")
    try:
        return action(derive_seed(seed, 0xFA11))
    except _RECOVERABLE as e:
        raise RunAborted(f"{label} failed twice: {e}") from e


def evaluate_policy(
    model: DynamicsModel,
    env: Environment,
    planner_config: PlannerConfig,
    episodes: int,
    seed: int,
    k: int = 5,
) -> Tuple[float, List[float], List[EpisodeResult]]:
    """Greedy MPC on the true environment; nothing is added to any dataset

    Episode e starts from ``env.reset(derive_seed(seed, e))``, so every
    evaluation with the same seed (including the solve threshold) sees the
    same start states.

    Returns:
        (mean return, per-episode returns, episode results)
    """
    controller = ModelPredictiveController(env.spec, planner_config, k)
    cost = GreedyCost(env)
    results = []
    for episode in range(episodes):
        start = env.reset(derive_seed(seed, episode))
        results.append(controller.run_episode(env, model, cost, start, derive_seed(seed, episode, 1)))
    returns = [r.trajectory.total_return for r in results]
    return float(np.mean(returns)), returns, results


def model_error_diagnostics(
    posterior: GpPosterior,
    env: Environment,
    planned_states: np.ndarray,
    planned_actions: np.ndarray,
    seed: int = 0,
    points: int = 1000,
) -> Tuple[float, float]:
    """One-step MSE (wrapped delta space) on planner points and a uniform test set

    Returns:
        (planner-visited error, uniform-test-set error)
    """

    def mse(states: np.ndarray, actions: np.ndarray) -> float:
        if len(states) == 0:
            return float("nan")
        truth = env.step_batch(states, actions)
        predicted = posterior.predict_mean(states, actions)
        error = wrap_periodic(predicted - truth, env.spec.periodic_dims)
        return float(np.mean(error**2))

    planned_states = np.asarray(planned_states, dtype=float).reshape(-1, env.spec.state_dim)
    planned_actions = env.clip_action(np.asarray(planned_actions, dtype=float).reshape(-1, env.spec.action_dim))
    finite = np.all(np.isfinite(planned_states), axis=1)
    states, actions = env.sample_state_actions(make_rng(seed, 0xD1A6), points)
    return mse(planned_states[finite], planned_actions[finite]), mse(states, actions)


class Agent:
    """One (algorithm, environment, seed) learning run"""

    def __init__(self, env: Environment, config: AgentConfig, seed: int):
        self.env = env
        self.config = config
        self.seed = seed
        self.algorithm = ALGORITHMS[config.algorithm]
        self.planner_config = config.planner_for(env.name)
        self.gp_config: GpConfig = config.gp
        self.periodic_dims = env.spec.periodic_dims

        spec = env.spec
        self.dataset = TransitionDataset.empty(spec.state_dim, spec.action_dim)
        input_dim = spec.state_dim + len(self.periodic_dims) + spec.action_dim
        self.hyperparams: List[KernelHyperparams] = [
            KernelHyperparams.default(input_dim, self.gp_config) for _ in range(spec.state_dim)
        ]
        mode = self.algorithm.mode
        if self.algorithm.oracle and spec.fixed_start:
            mode = "open_loop"
        self.transcript = RunTranscript(env=env.name, algorithm=config.algorithm, seed=seed, mode=mode)
        self.ground_truth = GroundTruthModel(env)

    # ------------------------------------------------------------------
    # shared pieces

    def posterior(self) -> GpPosterior:
        return GpPosterior(self.dataset, self.hyperparams, self.periodic_dims, self.gp_config)

    def _refit(self, tag: int) -> None:
        if len(self.dataset) < 2:
            return

        def fit(seed: int) -> List[KernelHyperparams]:
            return fit_hyperparameters(self.dataset, self.gp_config.restarts, seed, self.periodic_dims, self.gp_config)

        self.hyperparams = _retry(fit, "Hyperparameter refit", derive_seed(self.seed, tag, 4))

    def _sample_trajectories(self, posterior: GpPosterior, tag: int) -> OptimalTrajectorySamples:
        def sample(seed: int) -> OptimalTrajectorySamples:
            return sample_optimal_trajectories(
                posterior, self.env, self.planner_config, self.config.m, self.config.n, seed
            )

        samples = _retry(sample, "Optimal-trajectory sampling", derive_seed(self.seed, tag, 2))
        self.transcript.trajectory_sample_refreshes += 1
        return samples

    def _record(self, episode: int, t: int, state, action, next_state, cost: Optional[float], started: float) -> None:
        self.dataset = self.dataset.append(state, action, next_state)
        self.transcript.steps.append(
            StepRecord(
                episode=episode,
                t=t,
                dataset_size=len(self.dataset),
                state=[float(x) for x in state],
                action=[float(x) for x in action],
                next_state=[float(x) for x in next_state],
                planning_cost=None if cost is None or not np.isfinite(cost) else float(cost),
                wall_clock=time.perf_counter() - started,
            )
        )

    def _evaluate(self) -> EvalRecord:
        posterior = self.posterior()
        model: DynamicsModel = self.ground_truth if self.algorithm.oracle else posterior
        mean_return, returns, results = evaluate_policy(
            model, self.env, self.planner_config, self.config.eval_episodes, self.config.eval_seed, self.config.k
        )
        planned_states = np.concatenate([r.planned_states for r in results], axis=0)
        planned_actions = np.concatenate([r.planned_actions for r in results], axis=0)
        planner_mse, uniform_mse = model_error_diagnostics(
            posterior,
            self.env,
            planned_states,
            planned_actions,
            self.config.eval_seed,
            self.config.diagnostic_points,
        )
        record = EvalRecord(
            transitions=len(self.dataset),
            mean_return=mean_return,
            returns=[float(r) for r in returns],
            planner_mse=planner_mse,
            uniform_mse=uniform_mse,
        )
        self.transcript.evals.append(record)
        log(f"  ✓ {self.config.algorithm} seed {self.seed}: {record.transitions} transitions, return {mean_return:.2f}")
        return record

    def run(self, mode: Optional[str] = None) -> RunTranscript:
        """Run the configured algorithm; failures leave a partial, aborted transcript

        Args:
            mode: Force closed_loop, open_loop or tqrl instead of the algorithm's own mode
        """
        if mode is not None:
            self.transcript.mode = mode
        try:
            if self.transcript.mode == "tqrl":
                self._run_tqrl()
            else:
                self._run_episodic(open_loop=self.transcript.mode == "open_loop")
        except RunAborted as e:
            warn(f"Run {self.config.algorithm}/{self.env.name}/seed {self.seed} aborted: {e}")
            self.transcript.aborted = True
            self.transcript.abort_reason = str(e)
        return self.transcript

    # ------------------------------------------------------------------
    # episodic modes

    def _run_episodic(self, open_loop: bool) -> None:
        spec = self.env.spec
        cfg = self.planner_config
        horizon = spec.horizon
        plan_horizon = horizon if open_loop else cfg.horizon
        replan = horizon if open_loop else cfg.replan_period
        controller = ModelPredictiveController(spec, cfg, self.config.k)
        cost_name = self.algorithm.cost
        eval_every = self.config.eval_every
        next_eval = eval_every

        for episode in range(self.config.budget):
            snapshot = self.posterior()
            samples = None
            if cost_name in ("tip", "tip_summed"):
                samples = self._sample_trajectories(snapshot, episode)

            state = self.env.reset(derive_seed(self.seed, episode, 1))
            controller.reset()
            t = 0
            while t < horizon:
                started = time.perf_counter()
                current = snapshot if open_loop or t == 0 else self.posterior()
                model: DynamicsModel = self.ground_truth if self.algorithm.oracle else current
                cost_posterior = snapshot if samples is not None else current
                cost = build_cost(cost_name, self.env, cost_posterior, samples)

                def plan(seed: int):
                    functions = model.sample_functions(function_count(model, self.config.k), derive_seed(seed, 3))
                    return controller.plan(functions, state, cost, seed, plan_horizon)

                result = _retry(plan, f"Planning at episode {episode}, t={t}", derive_seed(self.seed, episode, t))
                self.transcript.planner_calls += 1

                executed = min(replan, horizon - t, plan_horizon)
                for offset, action in enumerate(result.actions[:executed]):
                    next_state = self.env.step(state, action)
                    self._record(episode, t + offset, state, action, next_state, result.cost if offset == 0 else None, started)
                    state = next_state
                    started = time.perf_counter()
                    if next_eval is not None and len(self.dataset) >= next_eval:
                        self._refit(len(self.dataset))
                        self._evaluate()
                        next_eval += eval_every
                controller.advance(executed)
                t += executed

            if eval_every is None:
                self._refit(episode)
                self._evaluate()

    # ------------------------------------------------------------------
    # transition-query mode

    def _candidates(self, rng: np.random.Generator, samples: Optional[OptimalTrajectorySamples]):
        spec = self.env.spec
        count = self.config.tqrl_candidates
        use_pool = self.config.tqrl_pool_from_trajectories
        if use_pool is None:
            use_pool = spec.state_dim >= 6
        states, actions = self.env.sample_state_actions(rng, count)
        if use_pool and samples is not None:
            pool = samples.pooled_states()
            if len(pool):
                states = pool[rng.choice(len(pool), size=count, replace=len(pool) < count)]
        return states, actions

    def _run_tqrl(self) -> None:
        every = self.config.tqrl_eval_every
        barl = self.algorithm.cost == "eig_tau"
        information: Optional[TrajectoryInformationCost] = None
        samples = None

        for query in range(self.config.budget):
            started = time.perf_counter()
            if barl:
                # every query grows D, so τ* is redrawn on the current posterior
                snapshot = self.posterior()
                samples = self._sample_trajectories(snapshot, query)
                information = TrajectoryInformationCost(snapshot, samples)

            rng = make_rng(self.seed, query, 5)
            states, actions = self._candidates(rng, samples)

            def acquire(seed: int) -> np.ndarray:
                if barl:
                    return information.pointwise_information(states, actions)
                return pointwise_log_variances(self.posterior(), states[:, None], actions[:, None])[:, 0]

            values = _retry(acquire, f"Acquisition at query {query}", derive_seed(self.seed, query))
            values = np.where(np.isnan(values), -np.inf, values)
            # np.argmax keeps the lowest index among ties
            best = int(np.argmax(values))
            state, action = states[best], self.env.clip_action(actions[best])
            next_state = self.env.query(state, action)
            self._record(query, 0, state, action, next_state, -float(values[best]), started)

            if (query + 1) % every == 0 or query + 1 == self.config.budget:
                self._refit(query)
                self._evaluate()


def run_agent(env: Environment, config: AgentConfig, seed: int) -> RunTranscript:
    return Agent(env, config, seed).run()


def run_closed_loop(env: Environment, config: AgentConfig, seed: int) -> RunTranscript:
    """Bayesian MPC with the configured cost"""
    return Agent(env, config, seed).run("closed_loop")


def run_open_loop(env: Environment, config: AgentConfig, seed: int) -> RunTranscript:
    """One full-horizon plan per trial, executed without replanning"""
    if not env.spec.fixed_start:
        raise ValueError(f"Open-loop control needs a fixed start state; {env.name} samples its start")
    return Agent(env, config, seed).run("open_loop")


def run_tqrl(env: Environment, config: AgentConfig, seed: int) -> RunTranscript:
    """Pointwise acquisition with arbitrary transition queries"""
    if ALGORITHMS[config.algorithm].mode != "tqrl":
        raise ValueError(f"Algorithm {config.algorithm} does not run in the transition-query setting")
    return Agent(env, config, seed).run("tqrl")
