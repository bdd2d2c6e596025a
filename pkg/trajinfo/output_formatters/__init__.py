"""Output formatters initialization"""

from trajinfo.output_formatters.formatters import (
    BaseFormatter,
    LearningCurveFormatter,
    DiagnosticsFormatter,
    TranscriptFormatter,
    ReportFormatter,
    PlotFormatter,
)

__all__ = [
    "BaseFormatter",
    "LearningCurveFormatter",
    "DiagnosticsFormatter",
    "TranscriptFormatter",
    "ReportFormatter",
    "PlotFormatter",
]
