"""Prior time-in-bar for agents who stay vs. leave once the bar first gets crowded."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import DegenerateSampleError, NoCrowdingError
from ..recorder import RunLog
from .stats import welch_t_test
from .timing import crowding_time


@dataclass(frozen=True)
class DurationComparison:
    t_over: int | None
    stay_agents: tuple[int, ...]
    leave_agents: tuple[int, ...]
    stay_durations: tuple[int, ...]
    leave_durations: tuple[int, ...]
    t_statistic: float | None = None
    degrees_freedom: float | None = None
    p_value: float | None = None


def _with_test(stay: Sequence[int], leave: Sequence[int]) -> tuple[float | None, float | None, float | None]:
    if len(stay) < 2 or len(leave) < 2:
        return None, None, None
    try:
        res = welch_t_test(stay, leave)
    except DegenerateSampleError:
        return None, None, None
    return res.t, res.df, res.p


def duration_comparison(log: RunLog, horizon: int = 50) -> DurationComparison:
    """Split agents inside at the first crowded step into stay and leave groups.

    An agent leaves if it is outside at any step in (T_over, T_over + horizon];
    its duration is the run of consecutive inside steps ending at T_over
    inclusive, so an agent that entered exactly at T_over has duration 1.
    """
    t_over = crowding_time(log)
    if t_over is None:
        raise NoCrowdingError(f"{log.source or 'run'} never reaches the crowding threshold")
    inside = log.inside
    last = min(t_over + horizon, len(inside) - 1)
    stay, leave, stay_d, leave_d = [], [], [], []
    for agent in range(log.n_agents):
        if not inside[t_over, agent]:
            continue
        k = t_over
        while k >= 0 and inside[k, agent]:
            k -= 1
        duration = t_over - k
        if inside[t_over + 1:last + 1, agent].all():
            stay.append(agent)
            stay_d.append(duration)
        else:
            leave.append(agent)
            leave_d.append(duration)
    return DurationComparison(
        t_over, tuple(stay), tuple(leave), tuple(stay_d), tuple(leave_d), *_with_test(stay_d, leave_d)
    )


def pooled_duration_comparison(logs: Sequence[RunLog], horizon: int = 50) -> DurationComparison:
    """Pool durations over every run that reaches the threshold, then test once."""
    stay_d: list[int] = []
    leave_d: list[int] = []
    for log in logs:
        try:
            one = duration_comparison(log, horizon)
        except NoCrowdingError:
            continue
        stay_d.extend(one.stay_durations)
        leave_d.extend(one.leave_durations)
    return DurationComparison(None, (), (), tuple(stay_d), tuple(leave_d), *_with_test(stay_d, leave_d))
