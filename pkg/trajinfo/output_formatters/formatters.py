"""Output formatters for experiment artifacts"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from trajinfo.models import EvalRecord, RunTranscript, SampleComplexityReport


class BaseFormatter:
    """Base class for output formatters"""

    def format(self, *args, **kwargs) -> Any:
        raise NotImplementedError

    def to_file(self, *args, **kwargs) -> None:
        raise NotImplementedError


def _write_text(content: str, output_path) -> None:
    with open(output_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(content)


class LearningCurveFormatter(BaseFormatter):
    """One CSV row per eval point: seed, transitions, mean_return, return_i..., planner_mse, uniform_mse"""

    def format(self, records: Sequence[EvalRecord], seed: int) -> pd.DataFrame:
        width = max((len(r.returns) for r in records), default=0)
        rows = []
        for record in records:
            row: Dict[str, Any] = {
                "seed": seed,
                "transitions": record.transitions,
                "mean_return": record.mean_return,
            }
            for i in range(width):
                row[f"return_{i}"] = record.returns[i] if i < len(record.returns) else np.nan
            row["planner_mse"] = record.planner_mse
            row["uniform_mse"] = record.uniform_mse
            rows.append(row)
        columns = ["seed", "transitions", "mean_return"] + [f"return_{i}" for i in range(width)]
        columns += ["planner_mse", "uniform_mse"]
        return pd.DataFrame(rows, columns=columns)

    def to_file(self, records: Sequence[EvalRecord], seed: int, output_path) -> None:
        """Save the learning curve of one seed to CSV"""
        self.format(records, seed).to_csv(output_path, index=False)

    def read(self, input_path) -> Tuple[Optional[int], List[EvalRecord]]:
        """Parse a learning-curve CSV back into (seed, records)

        Floats are parsed with round-trip precision, so a file written by
        `to_file` reconstructs the original records exactly.
        """
        frame = pd.read_csv(input_path, float_precision="round_trip")
        return_columns = sorted(
            (c for c in frame.columns if c.startswith("return_")), key=lambda c: int(c.split("_")[1])
        )
        seed = int(frame["seed"].iloc[0]) if len(frame) else None
        records = []
        for _, row in frame.iterrows():
            returns = [float(row[c]) for c in return_columns if not pd.isna(row[c])]
            records.append(
                EvalRecord(
                    transitions=int(row["transitions"]),
                    mean_return=float(row["mean_return"]),
                    returns=returns,
                    planner_mse=float(row["planner_mse"]),
                    uniform_mse=float(row["uniform_mse"]),
                )
            )
        return seed, records


class DiagnosticsFormatter(BaseFormatter):
    """Model-error diagnostics (planner-visited vs uniform) across seeds"""

    COLUMNS = ["seed", "transitions", "mean_return", "planner_mse", "uniform_mse"]

    def format(self, transcripts: Sequence[RunTranscript]) -> pd.DataFrame:
        rows = [
            {
                "seed": transcript.seed,
                "transitions": record.transitions,
                "mean_return": record.mean_return,
                "planner_mse": record.planner_mse,
                "uniform_mse": record.uniform_mse,
            }
            for transcript in transcripts
            for record in transcript.evals
        ]
        return pd.DataFrame(rows, columns=self.COLUMNS)

    def to_file(self, transcripts: Sequence[RunTranscript], output_path) -> None:
        self.format(transcripts).to_csv(output_path, index=False)


class TranscriptFormatter(BaseFormatter):
    """Per-seed transcript JSON, with wall-clock timings in a separate sidecar"""

    def format(self, transcript: RunTranscript) -> str:
        return transcript.model_dump_json(indent=2) + "\n"

    def to_file(self, transcript: RunTranscript, output_path) -> None:
        _write_text(self.format(transcript), output_path)

    def read(self, input_path) -> RunTranscript:
        return RunTranscript.model_validate_json(Path(input_path).read_text(encoding="utf-8"))

    def timing(self, transcript: RunTranscript) -> Dict[str, Any]:
        seconds = [step.wall_clock for step in transcript.steps]
        return {
            "seed": transcript.seed,
            "total_seconds": float(sum(seconds)),
            "step_seconds": seconds,
        }

    def to_timing_file(self, transcript: RunTranscript, output_path) -> None:
        _write_text(json.dumps(self.timing(transcript), indent=2) + "\n", output_path)


class ReportFormatter(BaseFormatter):
    """Sample-complexity report as JSON plus a Markdown summary"""

    def format(self, report: SampleComplexityReport) -> str:
        return report.model_dump_json(indent=2) + "\n"

    def to_file(self, report: SampleComplexityReport, output_path) -> None:
        _write_text(self.format(report), output_path)

    def read(self, input_path) -> SampleComplexityReport:
        return SampleComplexityReport.model_validate_json(Path(input_path).read_text(encoding="utf-8"))

    def to_markdown(self, report: SampleComplexityReport) -> str:
        md_parts = [f"# Sample complexity: {report.algorithm} on {report.env}", ""]
        md_parts.append(f"- **Median transitions to solve**: {report.median_display}")
        md_parts.append(f"- **Solve threshold**: {report.threshold:.4f}")
        md_parts.append(f"- **Solve slack**: {report.solve_slack:g}")
        md_parts.append(f"- **Budget**: {report.budget_transitions} transitions")
        md_parts.append(f"- **Evaluation cadence**: {report.eval_cadence}")
        md_parts.append("")
        md_parts.append("| Seed | Transitions to solve | Status |")
        md_parts.append("|---:|---:|---|")
        for outcome in report.seeds:
            if outcome.failed:
                status = f"failed: {outcome.error}" if outcome.error else "failed"
                solved = f">{report.budget_transitions}"
            elif outcome.transitions_to_solve is None:
                status = "not solved"
                solved = f">{report.budget_transitions}"
            else:
                status = "solved"
                solved = str(outcome.transitions_to_solve)
            md_parts.append(f"| {outcome.seed} | {solved} | {status} |")
        md_parts.append("")
        return "\n".join(md_parts)

    def to_markdown_file(self, report: SampleComplexityReport, output_path) -> None:
        _write_text(self.to_markdown(report), output_path)


class PlotFormatter(BaseFormatter):
    """SVG line chart of mean evaluation return against transitions"""

    def format(self, transcripts: Sequence[RunTranscript], threshold: Optional[float] = None) -> Figure:
        fig = Figure(figsize=(6.4, 4.0))
        ax = fig.add_subplot(1, 1, 1)
        for transcript in transcripts:
            if not transcript.evals:
                continue
            x = [r.transitions for r in transcript.evals]
            y = [r.mean_return for r in transcript.evals]
            ax.plot(x, y, marker="o", markersize=3, label=f"seed {transcript.seed}")
        if threshold is not None:
            ax.axhline(threshold, color="black", linestyle="--", linewidth=1, label="threshold")
        if transcripts:
            first = transcripts[0]
            ax.set_title(f"{first.algorithm} on {first.env}")
        ax.set_xlabel("Number of transitions")
        ax.set_ylabel("Mean evaluation return")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(loc="lower right", fontsize="small")
        fig.tight_layout()
        return fig

    def to_file(self, transcripts: Sequence[RunTranscript], output_path, threshold: Optional[float] = None) -> None:
        fig = self.format(transcripts, threshold)
        # stable element ids, no timestamp
        with matplotlib.rc_context({"svg.hashsalt": "trajinfo"}):
            fig.savefig(output_path, format="svg", metadata={"Date": None})
