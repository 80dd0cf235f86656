from .binning import (
    NO_CONTEXT_BIN,
    BinCounts,
    BinningSpec,
    EvaluationReport,
    InstanceRecord,
    bin_outcomes,
    merge_reports,
)
from .matching import MatchResult, match_instances
from .metrics import PixelMetrics, pixel_metrics
from .report import comparison_frame, load_evaluation, write_comparison, write_report

__all__ = [
    "NO_CONTEXT_BIN",
    "BinCounts",
    "BinningSpec",
    "EvaluationReport",
    "InstanceRecord",
    "MatchResult",
    "PixelMetrics",
    "bin_outcomes",
    "comparison_frame",
    "load_evaluation",
    "match_instances",
    "merge_reports",
    "pixel_metrics",
    "write_comparison",
    "write_report",
]
