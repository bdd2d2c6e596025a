"""Multi-seed experiment harness

流程：
1. 用真实动力学上的 MPC 计算解题阈值（按 (env, planner_config, episodes, seed) 缓存）。
2. 每个随机种子独立运行一次智能体；崩溃的种子记为失败，不影响其他种子。
3. 按阈值判定每个种子首次解题时的转移数，取中位数（失败记为 budget+1）。
4. 写出学习曲线 CSV、诊断 CSV、转录 JSON、报告与可选的 SVG 曲线图。
"""

from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from trajinfo.config import Config, ExperimentConfig, PlannerConfig, default_planner_config
from trajinfo.core.agent import ALGORITHMS, evaluate_policy, run_agent
from trajinfo.core.environments import GroundTruthModel, make_env
from trajinfo.models import ExperimentRecord, RunTranscript, SampleComplexityReport, SeedOutcome
from trajinfo.output_formatters import (
    DiagnosticsFormatter,
    LearningCurveFormatter,
    PlotFormatter,
    ReportFormatter,
    TranscriptFormatter,
)
from trajinfo.utils.console import is_verbose, log, make_progress, set_verbose, warn

ThresholdKey = Tuple[str, PlannerConfig, int, int]


def solve_bar(threshold: float, slack: float) -> float:
    """Return an eval point must reach to count as solved"""
    return threshold - (1.0 - slack) * abs(threshold)


def transitions_to_solve(transcript: RunTranscript, threshold: float, slack: float = 1.0) -> Optional[int]:
    """Transitions at the first eval point whose mean return reaches the bar"""
    bar = solve_bar(threshold, slack)
    for record in transcript.evals:
        if record.mean_return >= bar:
            return record.transitions
    return None


def budget_transitions(experiment: ExperimentConfig) -> int:
    if ALGORITHMS[experiment.algo].mode == "tqrl":
        return experiment.budget
    return experiment.budget * make_env(experiment.env).spec.horizon


def eval_cadence(experiment: ExperimentConfig) -> str:
    mode = ALGORITHMS[experiment.algo].mode
    if mode == "tqrl":
        return f"every {experiment.agent.tqrl_eval_every} queries"
    if experiment.agent.eval_every:
        return f"every {experiment.agent.eval_every} transitions"
    horizon = make_env(experiment.env).spec.horizon
    unit = "trial" if mode == "open_loop" else "episode"
    return f"every {unit} ({horizon} transitions)"


def summarize(
    experiment: ExperimentConfig,
    threshold: float,
    transcripts: Dict[int, RunTranscript],
    errors: Optional[Dict[int, str]] = None,
) -> SampleComplexityReport:
    """Aggregate per-seed transcripts into a sample-complexity report

    Seeds without a transcript, and aborted seeds that never solved, count
    as failures and enter the median as budget + 1.
    """
    errors = errors or {}
    budget = budget_transitions(experiment)
    outcomes: List[SeedOutcome] = []
    values: List[float] = []
    for seed in experiment.seeds:
        transcript = transcripts.get(seed)
        if transcript is None:
            outcomes.append(SeedOutcome(seed=seed, failed=True, error=errors.get(seed, "missing transcript")))
            values.append(budget + 1)
            continue
        solved_at = transitions_to_solve(transcript, threshold, experiment.solve_slack)
        failed = transcript.aborted and solved_at is None
        outcomes.append(
            SeedOutcome(
                seed=seed,
                transitions_to_solve=solved_at,
                failed=failed,
                error=transcript.abort_reason if failed else None,
            )
        )
        values.append(budget + 1 if solved_at is None else solved_at)

    median = float(np.median(values))
    if median > budget:
        display = f">{budget}"
    elif median.is_integer():
        display = str(int(median))
    else:
        display = f"{median:.1f}"

    return SampleComplexityReport(
        env=experiment.env,
        algorithm=experiment.algo,
        threshold=threshold,
        solve_slack=experiment.solve_slack,
        budget_transitions=budget,
        eval_cadence=eval_cadence(experiment),
        seeds=outcomes,
        median=median,
        median_display=display,
    )


def _run_seed(experiment: ExperimentConfig, seed: int, verbose: bool) -> RunTranscript:
    """Worker entry point (top level so process pools can pickle it)"""
    set_verbose(verbose)
    return run_agent(make_env(experiment.env), experiment.agent_config(), seed)


class ExperimentPipeline:
    """Harness: solve threshold, multi-seed runs, report and artifacts"""

    _threshold_cache: Dict[ThresholdKey, float] = {}

    def __init__(self, config: Optional[Config] = None):
        """Initialize the pipeline

        Args:
            config: Configuration object. If None, loads from environment.
        """
        self.config = config or Config.from_env()
        set_verbose(self.config.verbose)

        self.curve_formatter = LearningCurveFormatter()
        self.diagnostics_formatter = DiagnosticsFormatter()
        self.transcript_formatter = TranscriptFormatter()
        self.report_formatter = ReportFormatter()
        self.plot_formatter = PlotFormatter()

    def compute_solve_threshold(
        self,
        env_name: str,
        planner_config: Optional[PlannerConfig] = None,
        episodes: int = 5,
        seed: int = 0,
    ) -> float:
        """Mean return of MPC planning on the true dynamics

        Args:
            env_name: Environment name
            planner_config: Planner settings; defaults to the environment table
            episodes: Evaluation episodes
            seed: Evaluation seed (shared with the agents' evaluations)

        Returns:
            Threshold return
        """
        planner_config = planner_config or default_planner_config(env_name)
        key = (env_name, planner_config, episodes, seed)
        if key not in self._threshold_cache:
            env = make_env(env_name)
            mean_return, _, _ = evaluate_policy(GroundTruthModel(env), env, planner_config, episodes, seed, k=1)
            self._threshold_cache[key] = mean_return
        return self._threshold_cache[key]

    def _workers(self, experiment: ExperimentConfig) -> int:
        cap = min(experiment.threads, self.config.threads) if experiment.threads else self.config.threads
        return max(1, min(cap, len(experiment.seeds)))

    def _run_seeds(self, experiment: ExperimentConfig) -> Tuple[Dict[int, RunTranscript], Dict[int, str]]:
        transcripts: Dict[int, RunTranscript] = {}
        errors: Dict[int, str] = {}
        workers = self._workers(experiment)

        if workers == 1:
            with make_progress() as progress:
                task = progress.add_task(f"{experiment.algo} on {experiment.env}", total=len(experiment.seeds))
                for seed in experiment.seeds:
                    try:
                        transcripts[seed] = _run_seed(experiment, seed, is_verbose())
                    except Exception as e:
                        warn(f"Seed {seed} crashed: {e}")
                        errors[seed] = str(e)
                    progress.advance(task)
            return transcripts, errors

        log(f"  Running {len(experiment.seeds)} seeds on {workers} worker processes")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_run_seed, experiment, seed, is_verbose()): seed for seed in experiment.seeds}
            for future in as_completed(futures):
                seed = futures[future]
                try:
                    transcripts[seed] = future.result()
                except Exception as e:
                    warn(f"Seed {seed} crashed: {e}")
                    errors[seed] = str(e)
        return transcripts, errors

    def run_experiment(self, experiment: Optional[ExperimentConfig] = None) -> SampleComplexityReport:
        """Run every seed of an experiment and write its artifacts

        Args:
            experiment: Experiment configuration; defaults to the loaded config

        Returns:
            SampleComplexityReport (also written to the output directory)
        """
        experiment = experiment or self.config.experiment
        episodes = experiment.agent.eval_episodes
        if experiment.threshold_seed != experiment.agent.eval_seed:
            warn(
                f"Threshold seed {experiment.threshold_seed} differs from the evaluation seed "
                f"{experiment.agent.eval_seed}; oracle runs may not reproduce the threshold"
            )

        log(f"\n{'='*60}")
        log(f"Experiment: {experiment.algo} on {experiment.env}")
        log(f"{'='*60}\n")
        log(f"Seeds: {', '.join(str(s) for s in experiment.seeds)} | budget {experiment.budget}\n")

        log("【Stage 1/3】Solve threshold - MPC on the true dynamics")
        threshold = self.compute_solve_threshold(
            experiment.env, experiment.planner_config(), episodes, experiment.threshold_seed
        )
        log(f"  ✓ Threshold: {threshold:.4f}\n")

        log("【Stage 2/3】Learning runs")
        transcripts, errors = self._run_seeds(experiment)
        log(f"  ✓ {len(transcripts)}/{len(experiment.seeds)} seeds finished\n")

        log("【Stage 3/3】Report")
        report = summarize(experiment, threshold, transcripts, errors)
        self.save_outputs(experiment, threshold, transcripts, report)

        log(f"{'='*60}")
        log(f"✅ Median transitions to solve: {report.median_display}")
        log(f"{'='*60}\n")
        return report

    def save_outputs(
        self,
        experiment: ExperimentConfig,
        threshold: float,
        transcripts: Dict[int, RunTranscript],
        report: SampleComplexityReport,
    ) -> Path:
        """Write all artifacts of an experiment; returns the output directory"""
        out_dir = Path(experiment.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        record = ExperimentRecord(
            config=experiment, threshold=threshold, threshold_episodes=experiment.agent.eval_episodes
        )
        (out_dir / "experiment.json").write_text(record.model_dump_json(indent=2) + "\n", encoding="utf-8")

        ordered = [transcripts[s] for s in experiment.seeds if s in transcripts]
        for transcript in ordered:
            seed = transcript.seed
            self.transcript_formatter.to_file(transcript, out_dir / f"transcript_seed{seed}.json")
            self.transcript_formatter.to_timing_file(transcript, out_dir / f"timing_seed{seed}.json")
            self.curve_formatter.to_file(transcript.evals, seed, out_dir / f"learning_curve_seed{seed}.csv")
        self.diagnostics_formatter.to_file(ordered, out_dir / "diagnostics.csv")
        self._write_report(report, out_dir)
        if experiment.plots:
            self.plot_formatter.to_file(ordered, out_dir / "learning_curves.svg", threshold)
        log(f"  ✓ Artifacts written to {out_dir}")
        return out_dir

    def _write_report(self, report: SampleComplexityReport, out_dir: Path) -> None:
        self.report_formatter.to_file(report, out_dir / "report.json")
        self.report_formatter.to_markdown_file(report, out_dir / "report.md")

    def report(self, out_dir) -> SampleComplexityReport:
        """Re-aggregate the report of an output directory from its transcripts

        Raises:
            FileNotFoundError: If the directory holds no experiment record
        """
        out_dir = Path(out_dir)
        record_path = out_dir / "experiment.json"
        if not record_path.exists():
            raise FileNotFoundError(f"No experiment record in {out_dir} (expected {record_path.name})")
        record = ExperimentRecord.model_validate_json(record_path.read_text(encoding="utf-8"))

        transcripts = {}
        for seed in record.config.seeds:
            path = out_dir / f"transcript_seed{seed}.json"
            if path.exists():
                transcripts[seed] = self.transcript_formatter.read(path)
            else:
                warn(f"Missing transcript for seed {seed}; counted as failed")

        report = summarize(record.config, record.threshold, transcripts)
        self._write_report(report, out_dir)
        log(f"  ✓ Report rebuilt from {len(transcripts)} transcripts: median {report.median_display}")
        return report


def compute_solve_threshold(
    env_name: str, planner_config: Optional[PlannerConfig] = None, episodes: int = 5, seed: int = 0
) -> float:
    return ExperimentPipeline(Config(verbose=is_verbose())).compute_solve_threshold(
        env_name, planner_config, episodes, seed
    )


def run_experiment(experiment: ExperimentConfig, config: Optional[Config] = None) -> SampleComplexityReport:
    """Run an experiment with runtime settings from ``config`` (or the environment)"""
    return ExperimentPipeline(config).run_experiment(experiment)
