"""Grid geometry, the bar region and the synchronous state transition."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, NamedTuple, Sequence

import numpy as np

from .errors import ConfigError

if TYPE_CHECKING:
    from .config import SimConfig


class Position(NamedTuple):
    x: int
    y: int


class Action(str, enum.Enum):
    """The five moves an agent may pick; values are the prompt tokens."""

    X_PLUS = "x+1"
    X_MINUS = "x-1"
    Y_PLUS = "y+1"
    Y_MINUS = "y-1"
    STAY = "stay"

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]

    @classmethod
    def from_token(cls, token: str) -> Action:
        return cls(token.strip().lower())


_DELTAS = {
    Action.X_PLUS: (1, 0),
    Action.X_MINUS: (-1, 0),
    Action.Y_PLUS: (0, 1),
    Action.Y_MINUS: (0, -1),
    Action.STAY: (0, 0),
}


@dataclass(frozen=True)
class GridConfig:
    width: int = 50
    height: int = 50
    bar_min: Position = Position(20, 20)
    bar_size: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "bar_min", Position(*self.bar_min))
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.bar_size < 1:
            raise ConfigError("bar_size must be >= 1")
        bx, by = self.bar_min
        if bx < 0 or by < 0 or bx + self.bar_size > self.width or by + self.bar_size > self.height:
            raise ConfigError("bar rectangle must lie inside the grid")

    @property
    def bar_max(self) -> Position:
        """Inclusive upper corner of the bar."""
        return Position(self.bar_min.x + self.bar_size - 1, self.bar_min.y + self.bar_size - 1)

    @property
    def bar_center(self) -> tuple[float, float]:
        return (
            self.bar_min.x + (self.bar_size - 1) / 2,
            self.bar_min.y + (self.bar_size - 1) / 2,
        )

    def contains(self, pos: Position) -> bool:
        return 0 <= pos[0] < self.width and 0 <= pos[1] < self.height


@dataclass(frozen=True)
class AgentState:
    id: int
    pos: Position
    memory: str = ""
    outbox: str = ""

    @property
    def name(self) -> str:
        return agent_name(self.id)


def agent_name(agent_id: int) -> str:
    return f"Agent{agent_id}"


@dataclass(frozen=True)
class Decision:
    """What a brain produced for one agent at one step."""

    message: str
    memory: str
    action: Action


@dataclass(frozen=True)
class WorldState:
    step: int
    agents: tuple[AgentState, ...]
    config: SimConfig = field(repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "agents", tuple(self.agents))

    @property
    def grid(self) -> GridConfig:
        return self.config.grid

    @property
    def positions(self) -> list[Position]:
        return [a.pos for a in self.agents]


def is_inside(pos: Position, grid: GridConfig) -> bool:
    lo, hi = grid.bar_min, grid.bar_max
    return lo.x <= pos[0] <= hi.x and lo.y <= pos[1] <= hi.y


def apply_action(pos: Position, action: Action, grid: GridConfig) -> Position:
    """Move one cell; a move into a wall leaves that coordinate unchanged."""
    dx, dy = Action(action).delta
    x = min(max(pos[0] + dx, 0), grid.width - 1)
    y = min(max(pos[1] + dy, 0), grid.height - 1)
    return Position(x, y)


def attendance(world: WorldState) -> int:
    return sum(is_inside(a.pos, world.grid) for a in world.agents)


def is_crowded(world: WorldState) -> bool:
    return attendance(world) >= world.config.threshold_count


def distance(a: Position, b: Position, metric: str = "euclidean") -> float:
    dx, dy = a[0] - b[0], a[1] - b[1]
    if metric == "euclidean":
        return math.hypot(dx, dy)
    if metric == "chebyshev":
        return float(max(abs(dx), abs(dy)))
    raise ConfigError(f"unknown distance metric {metric!r}")


def neighbors(world: WorldState, agent_id: int) -> set[int]:
    """Agents within the communication radius and on the same side of the bar wall."""
    cfg = world.config
    me = world.agents[agent_id]
    here = is_inside(me.pos, cfg.grid)
    out = set()
    for other in world.agents:
        if other.id == agent_id:
            continue
        if is_inside(other.pos, cfg.grid) != here:
            continue
        if distance(me.pos, other.pos, cfg.distance_metric) <= cfg.comm_radius:
            out.add(other.id)
    return out


def step(world: WorldState, decisions: Sequence[Decision]) -> WorldState:
    """Apply every agent's decision simultaneously and advance the clock."""
    if len(decisions) != len(world.agents):
        raise ConfigError(
            f"expected {len(world.agents)} decisions at step {world.step}, got {len(decisions)}"
        )
    grid = world.grid
    agents = tuple(
        replace(
            agent,
            pos=apply_action(agent.pos, d.action, grid),
            memory=d.memory,
            outbox=d.message,
        )
        for agent, d in zip(world.agents, decisions)
    )
    return WorldState(step=world.step + 1, agents=agents, config=world.config)


def signed_boundary_distance(pos: Position, grid: GridConfig) -> float:
    """Euclidean distance to the bar wall, negative inside.

    Outside cells measure to the nearest bar cell; inside cells measure to the
    nearest cell of the ring just outside the bar. No cell maps to zero, so the
    sign flips exactly where ``is_inside`` does.
    """
    lo, hi = grid.bar_min, grid.bar_max
    x, y = pos
    if is_inside(pos, grid):
        depth = min(x - (lo.x - 1), (hi.x + 1) - x, y - (lo.y - 1), (hi.y + 1) - y)
        return -float(depth)
    dx = max(lo.x - x, 0, x - hi.x)
    dy = max(lo.y - y, 0, y - hi.y)
    return math.hypot(dx, dy)


def initial_world(config: SimConfig, positions: Sequence[Position]) -> WorldState:
    if len(positions) != config.n_agents:
        raise ConfigError(f"need {config.n_agents} initial positions, got {len(positions)}")
    for p in positions:
        if not config.grid.contains(p):
            raise ConfigError(f"initial position {tuple(p)} outside the grid")
    agents = tuple(AgentState(id=i, pos=Position(*p)) for i, p in enumerate(positions))
    return WorldState(step=0, agents=agents, config=config)


def random_placement(config: SimConfig) -> list[Position]:
    """Uniform random cells from the run seed."""
    grid = config.grid
    rng = np.random.default_rng(config.rng_seed)
    cells = [
        Position(x, y)
        for x in range(grid.width)
        for y in range(grid.height)
        if not (config.exclude_bar_at_init and is_inside(Position(x, y), grid))
    ]
    if not cells:
        raise ConfigError("no free cells for initial placement")
    idx = rng.integers(0, len(cells), size=config.n_agents)
    return [cells[int(i)] for i in idx]
