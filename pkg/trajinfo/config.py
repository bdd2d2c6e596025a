"""trajinfo 配置管理

约定：
- 所有配置对象都是 pydantic 模型，默认值即基准实验使用的超参数。
- `PlannerConfig` 为不可变对象（可哈希），用于阈值缓存的键。
- 运行时设置（线程数、输出目录、是否静默）通过环境变量覆盖，见 `Config.from_env`。
"""

import os
from typing import Dict, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from trajinfo.utils.console import warn

load_dotenv()


ENVIRONMENT_NAMES: Tuple[str, ...] = (
    "pendulum",
    "cartpole",
    "lava_path",
    "nonlinear_gain_1",
    "nonlinear_gain_2",
)

ALGORITHM_NAMES: Tuple[str, ...] = (
    "tip",
    "stip",
    "dip",
    "sdip",
    "mpc",
    "otip",
    "ompc",
    "odip",
    "barl",
    "eig_t",
    "mpc_groundtruth",
)


class GpConfig(BaseModel):
    """高斯过程动力学模型配置"""

    restarts: int = Field(default=3, ge=1, description="Multi-start count for the marginal likelihood optimizer")
    num_features: int = Field(default=512, ge=100, description="Random Fourier features per posterior function sample")
    cond_jitter_scale: float = Field(
        default=1e-6, gt=0.0, description="Noiseless-conditioning jitter as a fraction of signal variance"
    )
    default_lengthscale: float = Field(default=1.0, gt=0.0, description="Initial / fallback lengthscale")
    default_signal_variance: float = Field(default=1.0, gt=0.0, description="Initial / fallback signal variance")
    default_noise_variance: float = Field(default=1e-2, gt=0.0, description="Initial / fallback noise variance")
    lengthscale_bounds: Tuple[float, float] = Field(
        default=(1e-2, 1e2), description="Lengthscale bounds, relative to each input's range"
    )
    variance_bounds: Tuple[float, float] = Field(
        default=(1e-6, 1e2), description="Bounds for signal and noise variance (standardized units)"
    )
    dedup_tolerance: float = Field(default=1e-9, ge=0.0, description="Distance under which a conditioning point duplicates a training input")
    optimizer_maxiter: int = Field(default=200, ge=1, description="L-BFGS-B iterations per restart")


class PlannerConfig(BaseModel):
    """iCEM 规划器配置（不可变）"""

    model_config = ConfigDict(frozen=True)

    population: int = Field(ge=2, description="Iteration-0 population p (also the fixed batch size)")
    elites: int = Field(ge=1, description="Number of elites e")
    horizon: int = Field(ge=1, description="Planning horizon h")
    iterations: int = Field(ge=1, description="iCEM iterations per plan")
    noise_exponent: float = Field(default=3.0, ge=0.0, description="Colored-noise exponent beta")
    population_decay: float = Field(default=1.25, ge=1.0, description="Population decay gamma")
    elite_cache_fraction: float = Field(default=0.3, ge=0.0, lt=1.0, description="Fraction xi of elites carried over")
    replan_period: int = Field(default=1, ge=1, description="Actions executed between replans")
    fixed_batch: bool = Field(default=True, description="Pad every iteration to the iteration-0 population")
    momentum: float = Field(default=0.1, ge=0.0, lt=1.0, description="Weight kept on the previous sampling distribution")
    init_std_fraction: float = Field(default=0.25, gt=0.0, description="Initial std as a fraction of the action range")
    variance_floor: float = Field(default=1e-4, gt=0.0, description="Variance floor as a fraction of the squared action range")

    @model_validator(mode="after")
    def _check_elites(self) -> "PlannerConfig":
        if self.elites >= self.population:
            raise ValueError(f"elites ({self.elites}) must be smaller than population ({self.population})")
        return self


DEFAULT_PLANNER_CONFIGS: Dict[str, PlannerConfig] = {
    # closed-loop problems
    "pendulum": PlannerConfig(population=25, elites=3, horizon=20, iterations=3, replan_period=6),
    "cartpole": PlannerConfig(population=30, elites=6, horizon=15, iterations=5, replan_period=1),
    # open-loop problems: one plan over the whole episode
    "lava_path": PlannerConfig(population=25, elites=4, horizon=20, iterations=6, replan_period=20),
    "nonlinear_gain_1": PlannerConfig(population=50, elites=6, horizon=10, iterations=6, replan_period=10),
    "nonlinear_gain_2": PlannerConfig(population=50, elites=6, horizon=10, iterations=8, replan_period=10),
}


def default_planner_config(env_name: str) -> PlannerConfig:
    """Planner hyperparameters for an environment"""
    if env_name not in DEFAULT_PLANNER_CONFIGS:
        raise ValueError(f"Unknown environment: {env_name}")
    return DEFAULT_PLANNER_CONFIGS[env_name]


class AgentConfig(BaseModel):
    """智能体训练循环配置"""

    algorithm: str = Field(default="tip", description="Algorithm name")
    k: int = Field(default=5, ge=1, description="Posterior function samples per plan")
    m: int = Field(default=1, ge=1, description="Start states for the optimal-trajectory estimator")
    n: int = Field(default=15, ge=1, description="Posterior functions per start state for the estimator")
    planner: Optional[PlannerConfig] = Field(default=None, description="Planner override; defaults to the environment table")
    eval_episodes: int = Field(default=5, ge=1, description="Evaluation episodes per eval point")
    eval_seed: int = Field(default=0, description="Seed shared by every evaluation and the solve threshold")
    budget: int = Field(default=10, ge=1, description="Episodes (closed loop), trials (open loop) or queries (TQRL)")
    eval_every: Optional[int] = Field(
        default=None, ge=1, description="Training transitions between evaluations in episodic modes (None: after every episode or trial)"
    )
    tqrl_candidates: int = Field(default=1000, ge=1, description="Candidate set size per TQRL acquisition round")
    tqrl_eval_every: int = Field(default=10, ge=1, description="Queries between TQRL evaluations and refits")
    tqrl_pool_from_trajectories: Optional[bool] = Field(
        default=None, description="Draw TQRL candidate states from sampled optimal trajectories (None: auto for state_dim >= 6)"
    )
    diagnostic_points: int = Field(default=1000, ge=1, description="Uniform test-set size for model-error diagnostics")
    gp: GpConfig = Field(default_factory=GpConfig)

    @field_validator("algorithm")
    @classmethod
    def _known_algorithm(cls, value: str) -> str:
        if value not in ALGORITHM_NAMES:
            raise ValueError(f"Unknown algorithm: {value}. Choose from {', '.join(ALGORITHM_NAMES)}")
        return value

    def planner_for(self, env_name: str) -> PlannerConfig:
        return self.planner or default_planner_config(env_name)


class ExperimentConfig(BaseModel):
    """一次基准实验（多随机种子）的配置"""

    env: str = Field(default="pendulum", description="Environment name")
    algo: str = Field(default="tip", description="Algorithm name")
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1, description="Random seeds")
    budget: int = Field(default=10, ge=1, description="Episodes, trials or queries per seed")
    out_dir: str = Field(default="results", description="Output directory")
    solve_slack: float = Field(default=1.0, gt=0.0, le=1.0, description="Fraction of the threshold that counts as solved")
    threshold_seed: int = Field(default=0, description="Seed of the ground-truth MPC threshold run")
    plots: bool = Field(default=True, description="Emit SVG learning curves")
    threads: Optional[int] = Field(default=None, ge=1, description="Worker cap (defaults to TIP_THREADS)")
    planner: Optional[PlannerConfig] = Field(default=None, description="Planner override")
    gp: Optional[GpConfig] = Field(default=None, description="GP override")
    agent: AgentConfig = Field(default_factory=AgentConfig)

    @field_validator("env")
    @classmethod
    def _known_env(cls, value: str) -> str:
        if value not in ENVIRONMENT_NAMES:
            raise ValueError(f"Unknown environment: {value}. Choose from {', '.join(ENVIRONMENT_NAMES)}")
        return value

    @field_validator("algo")
    @classmethod
    def _known_algo(cls, value: str) -> str:
        if value not in ALGORITHM_NAMES:
            raise ValueError(f"Unknown algorithm: {value}. Choose from {', '.join(ALGORITHM_NAMES)}")
        return value

    def planner_config(self) -> PlannerConfig:
        return self.planner or self.agent.planner or default_planner_config(self.env)

    def agent_config(self) -> AgentConfig:
        """Agent configuration with the experiment-level overrides applied"""
        return self.agent.model_copy(
            update={
                "algorithm": self.algo,
                "budget": self.budget,
                "planner": self.planner_config(),
                "gp": self.gp or self.agent.gp,
            }
        )


class Config(BaseModel):
    """主配置对象"""

    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)
    threads: int = Field(default=1, ge=1, description="Maximum parallel seed workers")
    output_dir: str = Field(default="results", description="Default output directory")
    verbose: bool = Field(default=True, description="Print status lines and progress bars")

    @classmethod
    def from_env(cls) -> "Config":
        """从环境变量加载配置"""
        output_dir = os.getenv("TIP_OUTPUT_DIR", "results")
        return cls(
            experiment=ExperimentConfig(out_dir=output_dir),
            threads=max(1, cls._parse_int_env("TIP_THREADS", os.cpu_count() or 1)),
            output_dir=output_dir,
            verbose=os.getenv("TIP_VERBOSE", "true").lower() == "true",
        )

    @staticmethod
    def _parse_int_env(key: str, default: int) -> int:
        """解析整数环境变量（带兜底与告警）

        Args:
            key: 环境变量名
            default: 未设置或非法时的默认值

        Returns:
            解析后的整数
        """
        value = os.getenv(key)
        if value is None:
            return default

        try:
            return int(value)
        except ValueError:
            warn(f"Invalid integer value for {key}='{value}', using default {default}")
            return default
