"""Movement speed and radial direction versus signed distance to the bar wall."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from ..recorder import RunLog
from ..world import signed_boundary_distance


@dataclass(frozen=True)
class SpeedBin:
    start: float
    end: float
    crowded: bool
    count: int
    mean_speed: float
    mean_direction: float


@dataclass(frozen=True)
class SpeedProfile:
    bin_width: float
    bins: tuple[SpeedBin, ...]

    def rows(self, crowded: bool) -> list[SpeedBin]:
        return [b for b in self.bins if b.crowded == crowded]


def record_kinematics(log: RunLog):
    """Yield (distance_before, speed, direction, crowded_before) for every record.

    Direction is the change in signed distance, so positive means moving away
    from the bar.
    """
    grid = log.grid
    cache: dict[tuple[int, int], float] = {}

    def sbd(p):
        d = cache.get(p)
        if d is None:
            d = cache[p] = signed_boundary_distance(p, grid)
        return d

    for r in log.records:
        before, after = sbd(r.pos_before), sbd(r.pos_after)
        speed = math.hypot(r.pos_after[0] - r.pos_before[0], r.pos_after[1] - r.pos_before[1])
        yield before, speed, after - before, r.crowded_before


def speed_direction_profile(logs: Sequence[RunLog], bin_width: float = 1.0) -> SpeedProfile:
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    acc: dict[tuple[int, bool], list[float]] = {}
    for log in logs:
        for d, speed, direction, crowded in record_kinematics(log):
            key = (math.floor(d / bin_width), crowded)
            slot = acc.setdefault(key, [0, 0.0, 0.0])
            slot[0] += 1
            slot[1] += speed
            slot[2] += direction
    bins = tuple(
        SpeedBin(idx * bin_width, (idx + 1) * bin_width, crowded, int(n), s / n, dsum / n)
        for (idx, crowded), (n, s, dsum) in sorted(acc.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    )
    return SpeedProfile(bin_width, bins)
