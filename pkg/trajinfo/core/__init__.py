"""Core module initialization"""

from trajinfo.core.gp_model import (
    KernelHyperparams,
    GpPosterior,
    PosteriorFunctionSample,
    fit_hyperparameters,
    posterior_joint,
    sample_posterior_function,
    condition_noiseless,
)
from trajinfo.core.environments import Environment, EnvSpec, GroundTruthModel, make_env
from trajinfo.core.planner import ICEMPlanner, PlanResult, colored_noise, icem_optimize
from trajinfo.core.control import ModelPredictiveController, FixedFunctionModel, rollout
from trajinfo.core.cost_functions import (
    OptimalTrajectorySamples,
    build_cost,
    greedy_cost,
    explore_cost_joint,
    explore_cost_summed,
    tip_cost,
    tip_cost_summed,
    sample_optimal_trajectories,
)
from trajinfo.core.agent import (
    Agent,
    ALGORITHMS,
    evaluate_policy,
    model_error_diagnostics,
    run_agent,
    run_closed_loop,
    run_open_loop,
    run_tqrl,
)

__all__ = [
    "KernelHyperparams",
    "GpPosterior",
    "PosteriorFunctionSample",
    "fit_hyperparameters",
    "posterior_joint",
    "sample_posterior_function",
    "condition_noiseless",
    "Environment",
    "EnvSpec",
    "GroundTruthModel",
    "make_env",
    "ICEMPlanner",
    "PlanResult",
    "colored_noise",
    "icem_optimize",
    "ModelPredictiveController",
    "FixedFunctionModel",
    "rollout",
    "OptimalTrajectorySamples",
    "build_cost",
    "greedy_cost",
    "explore_cost_joint",
    "explore_cost_summed",
    "tip_cost",
    "tip_cost_summed",
    "sample_optimal_trajectories",
    "Agent",
    "ALGORITHMS",
    "evaluate_policy",
    "model_error_diagnostics",
    "run_agent",
    "run_closed_loop",
    "run_open_loop",
    "run_tqrl",
]
