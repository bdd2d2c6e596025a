"""配置加载相关测试"""

from __future__ import annotations

import pytest
from pydantic import ValidationError

from trajinfo.config import (
    AgentConfig,
    Config,
    ExperimentConfig,
    GpConfig,
    PlannerConfig,
    default_planner_config,
)


def test_config_from_env_loads_runtime_settings(monkeypatch):
    """验证 Config.from_env 能正确读取线程数、输出目录与静默开关。"""
    monkeypatch.setenv("TIP_THREADS", "3")
    monkeypatch.setenv("TIP_OUTPUT_DIR", "out/runs")
    monkeypatch.setenv("TIP_VERBOSE", "false")

    config = Config.from_env()
    assert config.threads == 3
    assert config.output_dir == "out/runs"
    assert config.experiment.out_dir == "out/runs"
    assert config.verbose is False


def test_config_from_env_invalid_threads_falls_back(monkeypatch):
    """非法整数环境变量回退到默认值而不是报错。"""
    monkeypatch.setenv("TIP_THREADS", "many")
    config = Config.from_env()
    assert config.threads >= 1


def test_planner_table_matches_benchmark_settings():
    pendulum = default_planner_config("pendulum")
    assert (pendulum.population, pendulum.elites, pendulum.horizon, pendulum.iterations) == (25, 3, 20, 3)
    lava = default_planner_config("lava_path")
    assert (lava.population, lava.elites, lava.horizon, lava.iterations) == (25, 4, 20, 6)
    assert default_planner_config("nonlinear_gain_2").iterations == 8


def test_unknown_environment_planner_rejected():
    with pytest.raises(ValueError):
        default_planner_config("reacher")


class TestPlannerConfig:
    """PlannerConfig 校验"""

    def test_elites_must_be_below_population(self):
        with pytest.raises(ValidationError):
            PlannerConfig(population=5, elites=5, horizon=3, iterations=1)

    def test_frozen_and_hashable(self):
        a = PlannerConfig(population=10, elites=2, horizon=4, iterations=2)
        b = PlannerConfig(population=10, elites=2, horizon=4, iterations=2)
        assert hash(a) == hash(b)
        assert {a: 1}[b] == 1
        with pytest.raises(ValidationError):
            a.population = 20

    def test_elite_cache_fraction_bounds(self):
        with pytest.raises(ValidationError):
            PlannerConfig(population=10, elites=2, horizon=4, iterations=2, elite_cache_fraction=1.0)


class TestExperimentConfig:
    """ExperimentConfig 校验与合并"""

    def test_unknown_names_rejected(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(env="reacher")
        with pytest.raises(ValidationError):
            ExperimentConfig(algo="pets")

    def test_solve_slack_range(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(solve_slack=0.0)
        with pytest.raises(ValidationError):
            ExperimentConfig(solve_slack=1.5)

    def test_agent_config_applies_overrides(self):
        planner = PlannerConfig(population=8, elites=2, horizon=4, iterations=2)
        experiment = ExperimentConfig(env="cartpole", algo="mpc", budget=3, planner=planner, gp=GpConfig(restarts=1))
        agent = experiment.agent_config()
        assert agent.algorithm == "mpc"
        assert agent.budget == 3
        assert agent.planner_for("cartpole") == planner
        assert agent.gp.restarts == 1

    def test_default_planner_comes_from_table(self):
        experiment = ExperimentConfig(env="cartpole")
        assert experiment.planner_config() == default_planner_config("cartpole")

    def test_json_round_trip(self):
        experiment = ExperimentConfig(env="lava_path", algo="otip", seeds=[1, 2])
        restored = ExperimentConfig.model_validate_json(experiment.model_dump_json())
        assert restored == experiment


def test_gp_config_feature_floor():
    with pytest.raises(ValidationError):
        GpConfig(num_features=50)


def test_agent_config_rejects_unknown_algorithm():
    with pytest.raises(ValidationError):
        AgentConfig(algorithm="sac")
