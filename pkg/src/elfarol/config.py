"""Scenario configuration and its TOML file format.

A scenario file maps one-to-one onto :class:`SimConfig`::

    n_agents = 20
    threshold_fraction = 0.6
    comm_radius = 5.0
    distance_metric = "euclidean"      # or "chebyshev"
    max_steps = 1000
    venue_name = "El Farol Bar"
    rng_seed = 0
    exclude_bar_at_init = false
    template_path = "prompt.txt"       # optional, relative to the file

    [grid]
    width = 50
    height = 50
    bar_min = [20, 20]
    bar_size = 10

    [brain]
    kind = "llm"                       # llm | greedy | threshold | random | replay
    # remaining keys are passed to the backend, e.g. model, temperature,
    # max_tokens, endpoint_url, p_leave, p_enter, source
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .world import GridConfig, Position

BRAIN_KINDS = ("llm", "greedy", "threshold", "random", "replay")

_BRAIN_ALIASES = {
    "greedytobar": "greedy",
    "thresholdresponder": "threshold",
    "randomwalk": "random",
}


@dataclass(frozen=True)
class BrainSpec:
    kind: str = "llm"
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        kind = str(self.kind).lower()
        kind = _BRAIN_ALIASES.get(kind, kind)
        if kind not in BRAIN_KINDS:
            raise ConfigError(f"unknown brain kind {self.kind!r}; expected one of {BRAIN_KINDS}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", dict(self.params))
        if kind == "replay" and not self.params.get("source"):
            raise ConfigError("replay brain needs a 'source' run directory")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.params}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> BrainSpec:
        data = dict(data)
        kind = data.pop("kind", "llm")
        return cls(kind=kind, params=data)


@dataclass(frozen=True)
class SimConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    n_agents: int = 20
    threshold_fraction: float = 0.6
    comm_radius: float = 5.0
    distance_metric: str = "euclidean"
    max_steps: int = 1000
    venue_name: str = "El Farol Bar"
    rng_seed: int = 0
    exclude_bar_at_init: bool = False
    brain: BrainSpec = field(default_factory=BrainSpec)
    template_path: str | None = None

    def __post_init__(self) -> None:
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")
        if not 0 < self.threshold_fraction <= 1:
            raise ConfigError("threshold_fraction must lie in (0, 1]")
        if self.comm_radius < 0:
            raise ConfigError("comm_radius must be >= 0")
        if self.distance_metric not in ("euclidean", "chebyshev"):
            raise ConfigError(f"unknown distance metric {self.distance_metric!r}")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be >= 0")

    @property
    def threshold_count(self) -> int:
        # round() guards against 0.6 * 20 landing a hair above 12
        return math.ceil(round(self.threshold_fraction * self.n_agents, 9))

    def to_dict(self) -> dict[str, Any]:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        grid = asdict(self.grid)
        grid["bar_min"] = list(self.grid.bar_min)
        out["grid"] = grid
        out["brain"] = self.brain.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SimConfig:
        data = dict(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "grid" in data:
                grid = dict(data["grid"])
                if "bar_min" in grid:
                    grid["bar_min"] = Position(*grid["bar_min"])
                data["grid"] = GridConfig(**grid)
            if "brain" in data:
                data["brain"] = BrainSpec.from_dict(data["brain"])
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, **overrides: Any) -> SimConfig:
        """Return a copy with non-None overrides applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


def load_config(path: str | Path) -> SimConfig:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    tpl = data.get("template_path")
    if tpl and not Path(tpl).is_absolute():
        data["template_path"] = str((path.parent / tpl).resolve())
    return SimConfig.from_dict(data)
