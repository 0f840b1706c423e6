"""Quantitative analyses over recorded runs."""

from .actions import ActionCell, ActionTable, action_table
from .durations import DurationComparison, duration_comparison, pooled_duration_comparison
from .events import ExitRateProfile, event_aligned_exit_rate, exit_rate_series, first_hashtag_step
from .kinematics import SpeedProfile, speed_direction_profile
from .report import (
    AnalysisReport,
    ComparisonReport,
    analyze_logs,
    compare_runs,
    export_comparison,
    export_report,
    read_table,
)
from .stats import WelchResult, betainc, t_two_sided_p, welch_t_test
from .timing import (
    TimingResult,
    aggregate_attendance,
    attendance_series,
    clustering_time,
    crowding_time,
    delta_t,
    histogram,
    timing,
)
from .tokens import TokenFrequency, compare_tokens, count_tokens, load_stopwords, token_frequencies

__all__ = [
    "ActionCell", "ActionTable", "AnalysisReport", "ComparisonReport", "DurationComparison",
    "ExitRateProfile", "SpeedProfile", "TimingResult", "TokenFrequency", "WelchResult",
    "action_table", "aggregate_attendance", "analyze_logs", "attendance_series", "betainc",
    "clustering_time", "compare_runs", "compare_tokens", "count_tokens", "crowding_time", "delta_t",
    "duration_comparison", "event_aligned_exit_rate", "exit_rate_series", "export_comparison",
    "export_report", "first_hashtag_step", "histogram", "load_stopwords", "pooled_duration_comparison",
    "read_table", "speed_direction_profile", "t_two_sided_p", "timing", "token_frequencies",
    "welch_t_test",
]
