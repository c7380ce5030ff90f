from .compare import PairedComparison, box_stats, compare_models, paired_comparison
from .events import (
    EVENT_SCORE_COLUMNS,
    MATCH_WINDOW_DAYS,
    EventList,
    EventScore,
    extract_events,
    match_events,
    prf1,
    score_events,
)
from .hydro import METRIC_NAMES, HydroMetrics, hydrograph_metrics
from .stats import WilcoxonResult, cohens_d, wilcoxon_signed_rank

__all__ = [
    "EVENT_SCORE_COLUMNS",
    "MATCH_WINDOW_DAYS",
    "METRIC_NAMES",
    "EventList",
    "EventScore",
    "HydroMetrics",
    "PairedComparison",
    "WilcoxonResult",
    "box_stats",
    "cohens_d",
    "compare_models",
    "extract_events",
    "hydrograph_metrics",
    "match_events",
    "paired_comparison",
    "prf1",
    "score_events",
    "wilcoxon_signed_rank",
]
