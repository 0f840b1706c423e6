"""Action distribution by location (inside/outside) and crowding status."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..errors import ContractError
from ..recorder import RunLog
from ..world import Action, is_inside

LOCATIONS = ("inside", "outside")
STATUSES = ("crowded", "not_crowded")


@dataclass(frozen=True)
class ActionCell:
    location: str
    status: str
    counts: dict[Action, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def empty(self) -> bool:
        return self.total == 0

    def frequency(self, action: Action) -> float | None:
        return self.counts.get(action, 0) / self.total if self.total else None

    @property
    def frequencies(self) -> dict[Action, float] | None:
        if self.empty:
            return None
        return {a: self.counts.get(a, 0) / self.total for a in Action}

    @property
    def stay_rate(self) -> float | None:
        return self.frequency(Action.STAY)

    @property
    def move_rate(self) -> float | None:
        stay = self.stay_rate
        return None if stay is None else 1.0 - stay


@dataclass(frozen=True)
class ActionTable:
    cells: dict[tuple[str, str], ActionCell]

    def cell(self, location: str, status: str) -> ActionCell:
        return self.cells[(location, status)]

    @property
    def total(self) -> int:
        return sum(c.total for c in self.cells.values())


def action_table(logs: Sequence[RunLog]) -> ActionTable:
    """Bin every record by where the agent stood and what it was told when deciding."""
    counts = {(loc, st): {a: 0 for a in Action} for loc in LOCATIONS for st in STATUSES}
    if logs:
        ref = (logs[0].n_agents, logs[0].threshold_count)
        for log in logs:
            if (log.n_agents, log.threshold_count) != ref:
                raise ContractError("action_table needs logs with the same N and threshold")
    for log in logs:
        grid = log.grid
        for r in log.records:
            loc = "inside" if is_inside(r.pos_before, grid) else "outside"
            st = "crowded" if r.crowded_before else "not_crowded"
            counts[(loc, st)][r.action] += 1
    return ActionTable({k: ActionCell(k[0], k[1], v) for k, v in counts.items()})
