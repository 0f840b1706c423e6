"""Attendance series and the clustering / crowding timing metrics.

Steps here are world steps: index 0 is the initial placement and index k is
the state after k synchronous updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..recorder import RunLog


def attendance_series(log: RunLog) -> list[int]:
    """Agents inside the bar at every world step (length ``n_steps + 1``)."""
    counts = [int(np.count_nonzero(log.inside[0]))]
    n = log.n_agents
    for s in range(log.n_steps):
        batch = log.records[s * n:(s + 1) * n]
        counts.append(sum(r.inside_after for r in batch))
    return counts


def _largest_component(points: np.ndarray, link: float) -> np.ndarray:
    n = len(points)
    d = np.hypot(*(points[:, None, :] - points[None, :, :]).transpose(2, 0, 1))
    adj = d <= link
    seen = np.zeros(n, dtype=bool)
    best: list[int] = []
    for start in range(n):
        if seen[start]:
            continue
        comp, stack = [], [start]
        seen[start] = True
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in np.flatnonzero(adj[i] & ~seen):
                seen[j] = True
                stack.append(int(j))
        if len(comp) > len(best):
            best = comp
    return points[sorted(best)]


def clustering_time(
    log: RunLog,
    dist: float = 10.0,
    frac: float = 0.6,
    *,
    centroid: str = "global",
    link: float | None = None,
) -> int | None:
    """First step where ``ceil(frac * N)`` agents lie within ``dist`` of the centroid.

    ``centroid="global"`` averages all agents. ``"largest_component"`` averages
    only the largest connected group of the proximity graph (edges between
    agents at most ``link`` apart, default the communication radius).
    """
    need = math.ceil(round(frac * log.n_agents, 9))
    if link is None:
        link = log.config.comm_radius
    for k, pts in enumerate(log.positions.astype(float)):
        if centroid == "global":
            c = pts.mean(axis=0)
        elif centroid == "largest_component":
            c = _largest_component(pts, link).mean(axis=0)
        else:
            raise ValueError(f"unknown centroid mode {centroid!r}")
        within = np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) <= dist
        if int(within.sum()) >= need:
            return k
    return None


def crowding_time(log: RunLog) -> int | None:
    """First step with attendance at or above the crowding threshold."""
    for k, a in enumerate(attendance_series(log)):
        if a >= log.threshold_count:
            return k
    return None


@dataclass(frozen=True)
class TimingResult:
    t_d: int | None
    t_b: int | None

    @property
    def delta_t(self) -> int | None:
        if self.t_d is None or self.t_b is None:
            return None
        return self.t_b - self.t_d


def timing(log: RunLog, dist: float = 10.0, frac: float = 0.6, **kw) -> TimingResult:
    return TimingResult(clustering_time(log, dist, frac, **kw), crowding_time(log))


def delta_t(log: RunLog, dist: float = 10.0, frac: float = 0.6, **kw) -> int | None:
    return timing(log, dist, frac, **kw).delta_t


@dataclass(frozen=True)
class HistogramBin:
    start: float
    end: float
    count: int


def histogram(values: Sequence[float], bin_width: float = 50.0, *, origin: float = 0.0) -> list[HistogramBin]:
    """Fixed-width histogram covering [min, max]; bins are [start, end)."""
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if not values:
        return []
    idx = [math.floor((v - origin) / bin_width) for v in values]
    lo, hi = min(idx), max(idx)
    counts = [0] * (hi - lo + 1)
    for i in idx:
        counts[i - lo] += 1
    return [
        HistogramBin(origin + (lo + k) * bin_width, origin + (lo + k + 1) * bin_width, c)
        for k, c in enumerate(counts)
    ]


@dataclass(frozen=True)
class AttendanceAggregate:
    """Per-step attendance across runs; shorter runs stop contributing at their end."""

    series: tuple[tuple[int, ...], ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    threshold: int
    n_agents: int


def aggregate_attendance(logs: Sequence[RunLog]) -> AttendanceAggregate:
    series = tuple(tuple(attendance_series(log)) for log in logs)
    length = max((len(s) for s in series), default=0)
    mean, std = [], []
    for k in range(length):
        col = np.array([s[k] for s in series if k < len(s)], dtype=float)
        mean.append(float(col.mean()))
        std.append(float(col.std()))
    threshold = logs[0].threshold_count if logs else 0
    n_agents = logs[0].n_agents if logs else 0
    return AttendanceAggregate(series, tuple(mean), tuple(std), threshold, n_agents)
