"""Hashtag detection and exit rates aligned on the first hashtag."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import NoEventError
from ..recorder import RunLog

HASHTAG_RE = re.compile(r"#\w+")


def hashtags(text: str) -> list[str]:
    return HASHTAG_RE.findall(text)


def first_hashtag_step(log: RunLog) -> int | None:
    """Step at which some agent first broadcast a message containing a hashtag."""
    for r in log.records:
        if HASHTAG_RE.search(r.message):
            return r.step
    return None


def exit_rate_series(log: RunLog) -> list[float | None]:
    """Fraction of the bar's occupants at step t-1 who are outside at step t.

    Index t runs over world steps; entry 0 is always ``None`` and so is any
    step whose previous attendance was zero.
    """
    inside = log.inside
    rates: list[float | None] = [None]
    for t in range(1, len(inside)):
        before = inside[t - 1]
        n = int(before.sum())
        if n == 0:
            rates.append(None)
            continue
        leavers = int((before & ~inside[t]).sum())
        rates.append(leavers / n)
    return rates


@dataclass(frozen=True)
class ExitRateProfile:
    offsets: tuple[int, ...]
    mean_rate: tuple[float | None, ...]
    std_rate: tuple[float | None, ...]
    runs_contributing: tuple[int, ...]
    n_runs: int
    event_steps: tuple[int | None, ...]


def event_aligned_exit_rate(logs: Sequence[RunLog], window: int) -> ExitRateProfile:
    """Mean and population std of the exit rate at offsets -window..+window.

    Offset o of a run refers to world step h + o, where h is its first
    hashtag step. Runs with no hashtag are skipped; an offset a run cannot
    supply (outside its range, or an empty bar) simply gets no contribution.
    """
    events = [first_hashtag_step(log) for log in logs]
    qualifying = [(log, h) for log, h in zip(logs, events) if h is not None]
    if not qualifying:
        raise NoEventError("no run contains a hashtag")
    series = [(exit_rate_series(log), h) for log, h in qualifying]
    offsets = tuple(range(-window, window + 1))
    means, stds, counts = [], [], []
    for o in offsets:
        vals = []
        for rates, h in series:
            t = h + o
            if 0 <= t < len(rates) and rates[t] is not None:
                vals.append(rates[t])
        counts.append(len(vals))
        if vals:
            arr = np.asarray(vals, dtype=float)
            means.append(float(arr.mean()))
            stds.append(float(arr.std()))
        else:
            means.append(None)
            stds.append(None)
    return ExitRateProfile(offsets, tuple(means), tuple(stds), tuple(counts), len(qualifying), tuple(events))
