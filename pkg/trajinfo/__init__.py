"""
trajinfo: task-aware exploration for model-based reinforcement learning

This package provides tools to:
- Fit per-dimension Gaussian-process dynamics models with exact joint posteriors
- Draw posterior function samples via random Fourier features
- Optimize action sequences with iCEM (colored noise, elite caching)
- Score plans by their information about optimal trajectories (TIP) or by
  greedy / entropy baselines
- Run closed-loop, open-loop and transition-query learning loops
- Measure sample complexity against a ground-truth MPC threshold

Entry point for experiments: ExperimentPipeline (also exposed as the `trajinfo` CLI).
"""

__version__ = "0.1.0"
__author__ = "ZhuYizhou"

from trajinfo.config import Config, ExperimentConfig, AgentConfig, PlannerConfig, GpConfig
from trajinfo.core.gp_model import GpPosterior, fit_hyperparameters, sample_posterior_function
from trajinfo.core.environments import make_env
from trajinfo.core.planner import ICEMPlanner
from trajinfo.core.cost_functions import sample_optimal_trajectories
from trajinfo.core.agent import run_closed_loop, run_open_loop, run_tqrl
from trajinfo.pipeline import ExperimentPipeline, compute_solve_threshold, run_experiment

__all__ = [
    "Config",
    "ExperimentConfig",
    "AgentConfig",
    "PlannerConfig",
    "GpConfig",
    "GpPosterior",
    "fit_hyperparameters",
    "sample_posterior_function",
    "make_env",
    "ICEMPlanner",
    "sample_optimal_trajectories",
    "run_closed_loop",
    "run_open_loop",
    "run_tqrl",
    "ExperimentPipeline",
    "compute_solve_threshold",
    "run_experiment",
]
