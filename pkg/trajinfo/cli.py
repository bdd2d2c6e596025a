"""Command-line interface for trajinfo"""

import argparse
import sys
import traceback
from pathlib import Path
from typing import List, Optional

from trajinfo.config import ALGORITHM_NAMES, ENVIRONMENT_NAMES, Config, ExperimentConfig
from trajinfo.pipeline import ExperimentPipeline
from trajinfo.utils.numeric import parse_seed_list


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajinfo",
        description="trajinfo: task-aware exploration benchmarks with GP dynamics and iCEM planning",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Five seeds of TIP on the pendulum, 10 episodes each
  trajinfo run --env pendulum --algo tip --seeds 0..4 --budget 10 --out results/pendulum_tip

  # Count a seed as solved at 95% of the threshold
  trajinfo run --env pendulum --algo mpc --seeds 0,1,2 --budget 10 --solve-slack 0.95

  # Start from a JSON config (print-config writes a template)
  trajinfo print-config --env lava_path --algo otip > lava.json
  trajinfo run --config lava.json --out results/lava

  # Ground-truth MPC threshold of an environment
  trajinfo threshold --env cartpole

  # Rebuild report.json / report.md from saved transcripts
  trajinfo report --out results/pendulum_tip

Environment variables:
  TIP_THREADS     maximum parallel seed workers
  TIP_OUTPUT_DIR  default output directory
  TIP_VERBOSE     set to false to silence status output
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a multi-seed experiment")
    run.add_argument("--env", choices=ENVIRONMENT_NAMES, help="Environment (default: pendulum)")
    run.add_argument("--algo", choices=ALGORITHM_NAMES, help="Algorithm (default: tip)")
    run.add_argument("--seeds", type=str, help="Seeds as a range '0..4' or list '0,2,5' (default: 0..4)")
    run.add_argument("--budget", type=int, help="Episodes, trials or queries per seed (default: 10)")
    run.add_argument("--out", type=str, help="Output directory (default: TIP_OUTPUT_DIR or results)")
    run.add_argument("--solve-slack", type=float, help="Fraction of the threshold that counts as solved (default: 1.0)")
    run.add_argument("--config", type=str, help="JSON experiment config; flags override its values")
    run.add_argument("--threads", type=int, help="Parallel seed workers (capped by TIP_THREADS)")
    run.add_argument("--eval-every", type=int, help="Evaluate every N training transitions (episodic algorithms)")
    run.add_argument("--no-plots", action="store_true", help="Skip the SVG learning-curve plot")
    run.add_argument("--quiet", action="store_true", help="Only print warnings and the final result")

    threshold = sub.add_parser("threshold", help="Compute the ground-truth MPC solve threshold")
    threshold.add_argument("--env", choices=ENVIRONMENT_NAMES, required=True, help="Environment")
    threshold.add_argument("--episodes", type=int, default=5, help="Evaluation episodes (default: 5)")
    threshold.add_argument("--seed", type=int, default=0, help="Evaluation seed (default: 0)")

    report = sub.add_parser("report", help="Re-aggregate the report of an output directory")
    report.add_argument("--out", type=str, required=True, help="Output directory of a previous run")

    show = sub.add_parser("print-config", help="Print the default experiment config as JSON")
    show.add_argument("--env", choices=ENVIRONMENT_NAMES, default="pendulum", help="Environment (default: pendulum)")
    show.add_argument("--algo", choices=ALGORITHM_NAMES, default="tip", help="Algorithm (default: tip)")

    return parser


def load_experiment(args: argparse.Namespace, config: Config) -> ExperimentConfig:
    """Merge a config file (if any) with command-line overrides"""
    if args.config:
        config_path = Path(args.config)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {args.config}")
        base = ExperimentConfig.model_validate_json(config_path.read_text(encoding="utf-8"))
    else:
        base = ExperimentConfig(out_dir=config.output_dir)

    updates = {}
    if args.env:
        updates["env"] = args.env
    if args.algo:
        updates["algo"] = args.algo
    if args.seeds:
        updates["seeds"] = parse_seed_list(args.seeds)
    if args.budget is not None:
        updates["budget"] = args.budget
    if args.out:
        updates["out_dir"] = args.out
    if args.solve_slack is not None:
        updates["solve_slack"] = args.solve_slack
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.no_plots:
        updates["plots"] = False

    merged = {**base.model_dump(), **updates}
    if args.eval_every is not None:
        merged["agent"]["eval_every"] = args.eval_every
    # model_copy would skip the validators
    return ExperimentConfig.model_validate(merged)


def default_experiment(env: str, algo: str) -> ExperimentConfig:
    """Experiment config with the planner table entry filled in"""
    experiment = ExperimentConfig(env=env, algo=algo)
    return experiment.model_copy(update={"planner": experiment.planner_config()})


def main(argv: Optional[List[str]] = None):
    """Main entry point for CLI"""
    parser = build_parser()
    args = parser.parse_args(argv)

    config = Config.from_env()
    if getattr(args, "quiet", False):
        config.verbose = False

    try:
        if args.command == "print-config":
            print(default_experiment(args.env, args.algo).model_dump_json(indent=2))
            return

        pipeline = ExperimentPipeline(config)

        if args.command == "threshold":
            if args.episodes < 1:
                raise ValueError(f"--episodes must be positive, got {args.episodes}")
            value = pipeline.compute_solve_threshold(args.env, None, args.episodes, args.seed)
            print(f"{args.env} threshold ({args.episodes} episodes, seed {args.seed}): {value:.6f}")
            return

        if args.command == "report":
            report = pipeline.report(args.out)
            print(f"Median transitions to solve: {report.median_display}")
            return

        experiment = load_experiment(args, config)
        report = pipeline.run_experiment(experiment)

        print()
        print("=" * 60)
        print("Summary:")
        print(f"  Environment: {experiment.env}")
        print(f"  Algorithm: {experiment.algo}")
        print(f"  Seeds: {', '.join(str(s) for s in experiment.seeds)}")
        print(f"  Threshold: {report.threshold:.4f}")
        print(f"  Median transitions to solve: {report.median_display}")
        print(f"  Output: {experiment.out_dir}")
        print("=" * 60)

    except Exception as e:
        print(f"\n❌ Error: {e}")
        if config.verbose and not isinstance(e, (ValueError, FileNotFoundError)):
            traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()
