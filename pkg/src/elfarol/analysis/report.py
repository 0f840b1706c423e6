"""Bundle every analysis over a set of runs and write CSV tables and SVG charts.

CSV schemas (one header row, ``,``-separated, UTF-8; empty cell = absent):

* ``timing.csv``: run, t_d, t_b, delta_t
* ``delta_t_histogram.csv``: bin_start, bin_end, count
* ``attendance.csv``: step, one column per run, mean, std
* ``action_table.csv``: location, status, action, count, frequency
* ``action_summary.csv``: location, status, total, stay_rate, move_rate
* ``durations.csv``: run, agent_id, group, duration
* ``welch.csv``: scope, t_over, n_stay, n_leave, mean_stay, mean_leave, t_statistic, degrees_freedom, p_value
* ``exit_rate_profile.csv``: offset, mean_rate, std_rate, runs_contributing
* ``speed_profile.csv``: bin_start, bin_end, crowded, count, mean_speed, mean_direction
* ``token_frequencies.csv``: rank, token, count, relative_frequency
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from ..errors import NoCrowdingError, NoEventError
from ..recorder import RunLog
from ..world import Action
from . import svg
from .actions import LOCATIONS, STATUSES, ActionTable, action_table
from .durations import DurationComparison, duration_comparison, pooled_duration_comparison
from .events import ExitRateProfile, event_aligned_exit_rate
from .kinematics import SpeedProfile, speed_direction_profile
from .timing import AttendanceAggregate, HistogramBin, TimingResult, aggregate_attendance, histogram, timing
from .tokens import TokenComparisonRow, TokenFrequency, compare_tokens, token_frequencies

log = logging.getLogger(__name__)

FORMATS = ("csv", "svg", "both")


@dataclass
class AnalysisReport:
    labels: list[str]
    timings: list[TimingResult]
    delta_t_bins: list[HistogramBin]
    attendance: AttendanceAggregate
    actions: ActionTable
    durations: list[tuple[str, DurationComparison | None]]
    pooled_durations: DurationComparison
    exit_profile: ExitRateProfile | None
    speed: SpeedProfile
    tokens: TokenFrequency
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def delta_ts(self) -> list[int]:
        return [t.delta_t for t in self.timings if t.delta_t is not None]


def unique_labels(labels: Sequence[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for lab in labels:
        if lab in seen:
            seen[lab] += 1
            out.append(f"{lab}_{seen[lab]}")
        else:
            seen[lab] = 0
            out.append(lab)
    return out


def analyze_logs(
    logs: Sequence[RunLog],
    labels: Sequence[str] | None = None,
    *,
    window: int = 20,
    bin_width: float = 1.0,
    dt_bin_width: float = 50.0,
    horizon: int = 50,
    cluster_dist: float = 10.0,
    cluster_frac: float = 0.6,
    centroid: str = "global",
    stopwords: Iterable[str] = (),
) -> AnalysisReport:
    labels = unique_labels(labels if labels is not None else [f"run_{i}" for i in range(len(logs))])
    timings = [timing(lg, cluster_dist, cluster_frac, centroid=centroid) for lg in logs]
    deltas = [t.delta_t for t in timings if t.delta_t is not None]
    durations: list[tuple[str, DurationComparison | None]] = []
    for lab, lg in zip(labels, logs):
        try:
            durations.append((lab, duration_comparison(lg, horizon)))
        except NoCrowdingError:
            durations.append((lab, None))
    try:
        exit_profile = event_aligned_exit_rate(logs, window)
    except NoEventError:
        exit_profile = None
    return AnalysisReport(
        labels=list(labels),
        timings=timings,
        delta_t_bins=histogram(deltas, dt_bin_width),
        attendance=aggregate_attendance(logs),
        actions=action_table(logs),
        durations=durations,
        pooled_durations=pooled_duration_comparison(logs, horizon),
        exit_profile=exit_profile,
        speed=speed_direction_profile(logs, bin_width),
        tokens=token_frequencies(logs, stopwords),
        params={"window": window, "bin_width": bin_width, "dt_bin_width": dt_bin_width, "horizon": horizon},
    )


# -- CSV ------------------------------------------------------------------


def _cell(v: Any) -> Any:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ""
    return v


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def parse_cell(text: str) -> Any:
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def read_table(path: str | Path) -> list[dict[str, Any]]:
    """Read a CSV written by this module back into typed rows."""
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return [{k: parse_cell(v) for k, v in row.items()} for row in csv.DictReader(fh)]


def _mean(xs: Sequence[float]) -> float | None:
    return sum(xs) / len(xs) if xs else None


def _csv_tables(report: AnalysisReport, out: Path) -> list[Path]:
    files = []
    files.append(
        write_csv(
            out / "timing.csv",
            ["run", "t_d", "t_b", "delta_t"],
            [(lab, t.t_d, t.t_b, t.delta_t) for lab, t in zip(report.labels, report.timings)],
        )
    )
    files.append(
        write_csv(
            out / "delta_t_histogram.csv",
            ["bin_start", "bin_end", "count"],
            [(b.start, b.end, b.count) for b in report.delta_t_bins],
        )
    )
    att = report.attendance
    rows = []
    for k in range(len(att.mean)):
        rows.append([k, *[s[k] if k < len(s) else None for s in att.series], att.mean[k], att.std[k]])
    files.append(write_csv(out / "attendance.csv", ["step", *report.labels, "mean", "std"], rows))

    table_rows, summary_rows = [], []
    for loc in LOCATIONS:
        for st in STATUSES:
            cell = report.actions.cell(loc, st)
            for a in Action:
                table_rows.append((loc, st, a.value, cell.counts.get(a, 0), cell.frequency(a)))
            summary_rows.append((loc, st, cell.total, cell.stay_rate, cell.move_rate))
    files.append(
        write_csv(out / "action_table.csv", ["location", "status", "action", "count", "frequency"], table_rows)
    )
    files.append(
        write_csv(
            out / "action_summary.csv", ["location", "status", "total", "stay_rate", "move_rate"], summary_rows
        )
    )

    dur_rows, welch_rows = [], []
    for lab, dc in report.durations:
        if dc is None:
            continue
        for agent, d in zip(dc.stay_agents, dc.stay_durations):
            dur_rows.append((lab, agent, "stay", d))
        for agent, d in zip(dc.leave_agents, dc.leave_durations):
            dur_rows.append((lab, agent, "leave", d))
        welch_rows.append(_welch_row(lab, dc))
    if report.durations:
        welch_rows.append(_welch_row("pooled", report.pooled_durations))
    files.append(write_csv(out / "durations.csv", ["run", "agent_id", "group", "duration"], dur_rows))
    files.append(
        write_csv(
            out / "welch.csv",
            ["scope", "t_over", "n_stay", "n_leave", "mean_stay", "mean_leave",
             "t_statistic", "degrees_freedom", "p_value"],
            welch_rows,
        )
    )

    ep = report.exit_profile
    ep_rows = [] if ep is None else list(zip(ep.offsets, ep.mean_rate, ep.std_rate, ep.runs_contributing))
    files.append(
        write_csv(out / "exit_rate_profile.csv", ["offset", "mean_rate", "std_rate", "runs_contributing"], ep_rows)
    )
    files.append(
        write_csv(
            out / "speed_profile.csv",
            ["bin_start", "bin_end", "crowded", "count", "mean_speed", "mean_direction"],
            [(b.start, b.end, b.crowded, b.count, b.mean_speed, b.mean_direction) for b in report.speed.bins],
        )
    )
    total = report.tokens.total
    files.append(
        write_csv(
            out / "token_frequencies.csv",
            ["rank", "token", "count", "relative_frequency"],
            [(i, t, c, c / total) for i, (t, c) in enumerate(report.tokens.ranked(), 1)],
        )
    )
    return files


def _welch_row(scope: str, dc: DurationComparison) -> tuple:
    return (
        scope,
        dc.t_over,
        len(dc.stay_durations),
        len(dc.leave_durations),
        _mean(dc.stay_durations),
        _mean(dc.leave_durations),
        dc.t_statistic,
        dc.degrees_freedom,
        dc.p_value,
    )


# -- SVG ------------------------------------------------------------------


def delta_t_chart(series: Sequence[tuple[str, Sequence[HistogramBin]]], chart_id: str = "delta-t") -> str:
    chart = svg.Chart("Clustering-to-crowding lag", "ΔT = T_b − T_d (steps)", "runs", chart_id=chart_id)
    colors = ("#1f77b4", "#999999", *svg.PALETTE[2:])
    for i, (label, bins) in enumerate(series):
        chart.bars(
            [(b.start, b.end, b.count) for b in bins],
            color=colors[i % len(colors)],
            label=label,
            slot=i,
            slots=max(len(series), 1),
        )
    return chart.render()


def attendance_chart(att: AttendanceAggregate, labels: Sequence[str], chart_id: str = "attendance") -> str:
    chart = svg.Chart("Agents in the bar", "step", "attendance", chart_id=chart_id)
    for i, s in enumerate(att.series):
        chart.line(list(enumerate(s)), color=svg.PALETTE[i % len(svg.PALETTE)], width=0.7)
    if att.mean:
        chart.line(list(enumerate(att.mean)), color="#0033cc", width=2.5, label="mean")
    if att.series:
        chart.hline(att.threshold, color="#000000", label=f"threshold ({att.threshold})")
        chart.hline(att.n_agents, color="#3366ff", label=f"all agents ({att.n_agents})")
    return chart.render()


def exit_rate_chart(ep: ExitRateProfile | None, chart_id: str = "exit-rate") -> str:
    chart = svg.Chart("Exit rate around the first hashtag", "offset from first hashtag (steps)",
                      "exit rate", chart_id=chart_id)
    if ep is not None:
        pts = [(o, m, s) for o, m, s in zip(ep.offsets, ep.mean_rate, ep.std_rate) if m is not None]
        chart.band([(o, m + s) for o, m, s in pts], [(o, max(m - s, 0.0)) for o, m, s in pts])
        chart.line([(o, m) for o, m, _ in pts], color="#1f77b4", width=2, label="mean")
    return chart.render()


def speed_chart(sp: SpeedProfile, chart_id: str = "speed") -> str:
    chart = svg.Chart("Speed vs. distance to the bar wall", "signed distance (negative = inside)",
                      "mean speed (cells/step)", chart_id=chart_id)
    for crowded, color, label in ((False, "#1f77b4", "not crowded"), (True, "#d62728", "crowded")):
        rows = sp.rows(crowded)
        if not rows:
            continue
        pts = [((b.start + b.end) / 2, b.mean_speed) for b in rows]
        chart.line(pts, color=color, width=1.5, label=label)
        chart.points(pts, [svg.diverging_color(b.mean_direction) for b in rows])
    return chart.render()


def _svg_charts(report: AnalysisReport, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    charts = {
        "delta_t_histogram.svg": delta_t_chart([("runs", report.delta_t_bins)]),
        "attendance.svg": attendance_chart(report.attendance, report.labels),
        "exit_rate.svg": exit_rate_chart(report.exit_profile),
        "speed_profile.svg": speed_chart(report.speed),
    }
    files = []
    for name, text in charts.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        files.append(path)
    return files


def export_report(report: AnalysisReport, out_dir: str | Path, fmt: str = "both") -> list[Path]:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    out = Path(out_dir)
    files: list[Path] = []
    if fmt in ("csv", "both"):
        files += _csv_tables(report, out)
    if fmt in ("svg", "both"):
        files += _svg_charts(report, out)
    return files


# -- two-scenario comparison ---------------------------------------------


@dataclass
class ComparisonReport:
    label_a: str
    label_b: str
    report_a: AnalysisReport
    report_b: AnalysisReport
    delta_t_bins: list[tuple[float, float, int, int]]
    token_rows: list[TokenComparisonRow]


def compare_runs(
    logs_a: Sequence[RunLog],
    logs_b: Sequence[RunLog],
    labels: tuple[str, str] = ("bar", "library"),
    *,
    queries: Sequence[str] = ("together",),
    **analyze_kw: Any,
) -> ComparisonReport:
    from ..errors import DataError

    if not logs_a or not logs_b:
        raise DataError("compare needs at least one run in each set")
    a = analyze_logs(logs_a, **analyze_kw)
    b = analyze_logs(logs_b, **analyze_kw)
    width = analyze_kw.get("dt_bin_width", 50.0)
    joint = histogram(a.delta_ts + b.delta_ts, width)
    ha = {bn.start: bn.count for bn in histogram(a.delta_ts, width)}
    hb = {bn.start: bn.count for bn in histogram(b.delta_ts, width)}
    bins = [(bn.start, bn.end, ha.get(bn.start, 0), hb.get(bn.start, 0)) for bn in joint]
    la, lb = labels
    if la == lb:
        la, lb = f"{la}_a", f"{lb}_b"
    return ComparisonReport(la, lb, a, b, bins, compare_tokens(a.tokens, b.tokens, queries))


def export_comparison(cmp: ComparisonReport, out_dir: str | Path, fmt: str = "both") -> list[Path]:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    out = Path(out_dir)
    la, lb = cmp.label_a, cmp.label_b
    files: list[Path] = []
    if fmt in ("csv", "both"):
        files.append(write_csv(out / "compare_delta_t.csv", ["bin_start", "bin_end", la, lb], cmp.delta_t_bins))
        timing_rows = [
            (lab, run, t.t_d, t.t_b, t.delta_t)
            for lab, rep in ((la, cmp.report_a), (lb, cmp.report_b))
            for run, t in zip(rep.labels, rep.timings)
        ]
        files.append(write_csv(out / "compare_timing.csv", ["set", "run", "t_d", "t_b", "delta_t"], timing_rows))
        files.append(
            write_csv(
                out / "compare_tokens.csv",
                ["token", f"rank_{la}", f"relative_{la}", f"count_{la}", f"rank_{lb}", f"relative_{lb}", f"count_{lb}"],
                [(r.token, r.rank_a, r.relative_a, r.count_a, r.rank_b, r.relative_b, r.count_b)
                 for r in cmp.token_rows],
            )
        )
        ma, mb = cmp.report_a.attendance.mean, cmp.report_b.attendance.mean
        rows = [
            (k, ma[k] if k < len(ma) else None, mb[k] if k < len(mb) else None)
            for k in range(max(len(ma), len(mb)))
        ]
        files.append(write_csv(out / "compare_attendance.csv", ["step", f"mean_{la}", f"mean_{lb}"], rows))
    if fmt in ("svg", "both"):
        out.mkdir(parents=True, exist_ok=True)
        bins_a = [HistogramBin(s, e, ca) for s, e, ca, _ in cmp.delta_t_bins]
        bins_b = [HistogramBin(s, e, cb) for s, e, _, cb in cmp.delta_t_bins]
        path = out / "compare_delta_t.svg"
        path.write_text(delta_t_chart([(la, bins_a), (lb, bins_b)], "compare-delta-t"), encoding="utf-8")
        files.append(path)
        chart = svg.Chart("Mean attendance", "step", "attendance", chart_id="compare-attendance")
        chart.line(list(enumerate(cmp.report_a.attendance.mean)), color="#1f77b4", width=2, label=la)
        chart.line(list(enumerate(cmp.report_b.attendance.mean)), color="#999999", width=2, label=lb)
        chart.hline(cmp.report_a.attendance.threshold, label="threshold")
        path = out / "compare_attendance.svg"
        path.write_text(chart.render(), encoding="utf-8")
        files.append(path)
    return files
