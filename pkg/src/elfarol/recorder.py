"""Run directories: a JSON manifest plus an append-only JSONL step trace.

Layout of one run directory::

    manifest.json       RunManifest (effective config, initial placement, status)
    trace.jsonl         one StepRecord per line, ordered by (step, agent_id)
    transcripts.jsonl   raw LLM requests/responses (LLM runs only)

Trace line schema (UTF-8, schema_version 1)::

    step            int     step at which the decision was taken (0-based)
    agent_id        int     0 .. N-1
    pos_before      [x, y]  position when deciding
    action          str     one of "x+1", "x-1", "y+1", "y-1", "stay"
    pos_after       [x, y]  position after the synchronous update
    message         str     message broadcast to neighbours
    memory          str     memory carried to the next step
    inside_after    bool    pos_after lies in the bar
    crowded_before  bool    the bar was crowded when deciding

Unknown extra fields are ignored on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .config import SimConfig
from .errors import ConfigError, ConsistencyError, ContractError, ParseError, SchemaError
from .world import Action, GridConfig, Position, apply_action, is_inside

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"
TRACE_NAME = "trace.jsonl"
TRANSCRIPT_NAME = "transcripts.jsonl"

RECORD_FIELDS = (
    "step",
    "agent_id",
    "pos_before",
    "action",
    "pos_after",
    "message",
    "memory",
    "inside_after",
    "crowded_before",
)


@dataclass(frozen=True)
class StepRecord:
    step: int
    agent_id: int
    pos_before: Position
    action: Action
    pos_after: Position
    message: str
    memory: str
    inside_after: bool
    crowded_before: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "step": self.step,
            "agent_id": self.agent_id,
            "pos_before": list(self.pos_before),
            "action": self.action.value,
            "pos_after": list(self.pos_after),
            "message": self.message,
            "memory": self.memory,
            "inside_after": self.inside_after,
            "crowded_before": self.crowded_before,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StepRecord:
        missing = [f for f in RECORD_FIELDS if f not in data]
        if missing:
            raise SchemaError(f"missing field(s): {', '.join(missing)}")
        try:
            return cls(
                step=_as_int(data["step"], "step"),
                agent_id=_as_int(data["agent_id"], "agent_id"),
                pos_before=_as_pos(data["pos_before"], "pos_before"),
                action=Action.from_token(data["action"]),
                pos_after=_as_pos(data["pos_after"], "pos_after"),
                message=_as_str(data["message"], "message"),
                memory=_as_str(data["memory"], "memory"),
                inside_after=_as_bool(data["inside_after"], "inside_after"),
                crowded_before=_as_bool(data["crowded_before"], "crowded_before"),
            )
        except (ValueError, AttributeError) as exc:
            raise SchemaError(f"bad action {data.get('action')!r}") from exc


def _as_int(v: Any, name: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(f"{name} must be an integer")
    return v


def _as_bool(v: Any, name: str) -> bool:
    if not isinstance(v, bool):
        raise SchemaError(f"{name} must be a boolean")
    return v


def _as_str(v: Any, name: str) -> str:
    if not isinstance(v, str):
        raise SchemaError(f"{name} must be a string")
    return v


def _as_pos(v: Any, name: str) -> Position:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise SchemaError(f"{name} must be [x, y]")
    return Position(_as_int(v[0], name), _as_int(v[1], name))


def make_record(
    step: int,
    agent_id: int,
    pos_before: Position,
    action: Action,
    message: str,
    memory: str,
    crowded_before: bool,
    grid: GridConfig,
) -> StepRecord:
    after = apply_action(pos_before, action, grid)
    return StepRecord(
        step=step,
        agent_id=agent_id,
        pos_before=Position(*pos_before),
        action=action,
        pos_after=after,
        message=message,
        memory=memory,
        inside_after=is_inside(after, grid),
        crowded_before=crowded_before,
    )


def check_record(record: StepRecord, grid: GridConfig) -> None:
    expected = apply_action(record.pos_before, record.action, grid)
    if record.pos_after != expected:
        raise ContractError(
            f"step {record.step} agent {record.agent_id}: pos_after {tuple(record.pos_after)} "
            f"!= {tuple(expected)} from action {record.action.value}"
        )
    if record.inside_after != is_inside(record.pos_after, grid):
        raise ContractError(f"step {record.step} agent {record.agent_id}: inside_after is wrong")


@dataclass
class RunManifest:
    config: dict[str, Any]
    initial_positions: list[list[int]]
    brain_kind: str
    start_time: str = ""
    engine_version: str = __version__
    schema_version: int = SCHEMA_VERSION
    status: str = "running"
    steps_completed: int = 0
    completion_stats: dict[str, Any] = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "engine_version": self.engine_version,
            "start_time": self.start_time,
            "status": self.status,
            "steps_completed": self.steps_completed,
            "brain_kind": self.brain_kind,
            "config": self.config,
            "initial_positions": self.initial_positions,
            "completion_stats": self.completion_stats,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> RunManifest:
        for key in ("config", "initial_positions", "brain_kind"):
            if key not in data:
                raise SchemaError(f"manifest missing {key!r}")
        return cls(
            config=data["config"],
            initial_positions=[list(p) for p in data["initial_positions"]],
            brain_kind=data["brain_kind"],
            start_time=data.get("start_time", ""),
            engine_version=data.get("engine_version", ""),
            schema_version=data.get("schema_version", SCHEMA_VERSION),
            status=data.get("status", "complete"),
            steps_completed=data.get("steps_completed", 0),
            completion_stats=data.get("completion_stats") or {},
            error=data.get("error"),
        )

    @cached_property
    def sim_config(self) -> SimConfig:
        try:
            return SimConfig.from_dict(self.config)
        except ConfigError as exc:
            raise SchemaError(f"manifest config invalid: {exc}") from exc


def now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class RunLog:
    manifest: RunManifest
    records: tuple[StepRecord, ...]
    source: str = ""

    @property
    def config(self) -> SimConfig:
        return self.manifest.sim_config

    @property
    def grid(self) -> GridConfig:
        return self.config.grid

    @property
    def n_agents(self) -> int:
        return self.config.n_agents

    @property
    def threshold_count(self) -> int:
        return self.config.threshold_count

    @property
    def n_steps(self) -> int:
        """Number of recorded transitions."""
        return len(self.records) // self.n_agents if self.n_agents else 0

    @cached_property
    def positions(self) -> np.ndarray:
        """Array of shape (n_steps + 1, N, 2); row k is the placement at world step k."""
        n = self.n_agents
        out = np.empty((self.n_steps + 1, n, 2), dtype=np.int64)
        out[0] = np.asarray(self.manifest.initial_positions, dtype=np.int64).reshape(n, 2)
        if self.records:
            after = np.asarray([r.pos_after for r in self.records], dtype=np.int64)
            out[1:] = after.reshape(self.n_steps, n, 2)
        return out

    @cached_property
    def inside(self) -> np.ndarray:
        """Boolean (n_steps + 1, N) occupancy matrix computed from positions."""
        g = self.grid
        p = self.positions
        lo, hi = g.bar_min, g.bar_max
        return (
            (p[..., 0] >= lo.x) & (p[..., 0] <= hi.x) & (p[..., 1] >= lo.y) & (p[..., 1] <= hi.y)
        )

    def records_at(self, step: int) -> tuple[StepRecord, ...]:
        n = self.n_agents
        return self.records[step * n:(step + 1) * n]


class TraceWriter:
    """Single-writer JSONL sink that validates records as they arrive."""

    def __init__(self, path: str | Path, grid: GridConfig):
        self.path = Path(path)
        self.grid = grid
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", encoding="utf-8", newline="\n")

    def append(self, record: StepRecord) -> None:
        check_record(record, self.grid)
        self._fh.write(record.to_json() + "\n")

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self) -> TraceWriter:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def append(sink: TraceWriter, record: StepRecord) -> None:
    sink.append(record)


def write_manifest(run_dir: str | Path, manifest: RunManifest) -> Path:
    path = Path(run_dir) / MANIFEST_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    tmp.replace(path)
    return path


def save(log: RunLog, run_dir: str | Path) -> Path:
    run_dir = Path(run_dir)
    with TraceWriter(run_dir / TRACE_NAME, log.grid) as w:
        for r in log.records:
            w.append(r)
    write_manifest(run_dir, log.manifest)
    return run_dir


def read_manifest(run_dir: str | Path) -> RunManifest:
    path = Path(run_dir) / MANIFEST_NAME
    if not path.exists():
        raise SchemaError(f"no manifest in {run_dir}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno) from exc
    return RunManifest.from_dict(data)


def read_trace(path: str | Path) -> list[StepRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON ({exc.msg})", lineno) from exc
            if not isinstance(data, dict):
                raise ParseError("trace line is not a JSON object", lineno)
            try:
                records.append(StepRecord.from_dict(data))
            except SchemaError as exc:
                raise SchemaError(f"line {lineno}: {exc}") from exc
    return records


def _bare_manifest(records: list[StepRecord]) -> RunManifest:
    """Manifest for a foreign trace shipped without one: default config, N inferred."""
    step0 = [r for r in records if r.step == 0]
    if not step0:
        raise ConsistencyError("trace has no step-0 records")
    step0.sort(key=lambda r: r.agent_id)
    cfg = SimConfig(n_agents=len(step0))
    return RunManifest(
        config=cfg.to_dict(),
        initial_positions=[list(r.pos_before) for r in step0],
        brain_kind="unknown",
        status="complete",
    )


def load(path: str | Path, *, strict: bool = True) -> RunLog:
    """Load and validate a run directory (or a bare trace.jsonl file).

    ``strict`` also checks the kinematic fields against the world rules;
    structural checks (ordering, per-step completeness) always run.
    """
    path = Path(path)
    if path.is_dir():
        trace_path = path / TRACE_NAME
        if not trace_path.exists():
            raise SchemaError(f"no {TRACE_NAME} in {path}")
        manifest = read_manifest(path)
        records = read_trace(trace_path)
    elif path.exists():
        records = read_trace(path)
        manifest = _bare_manifest(records)
    else:
        raise SchemaError(f"no such run: {path}")
    log = RunLog(manifest=manifest, records=tuple(records), source=str(path))
    validate(log, strict=strict)
    return log


def validate(log: RunLog, *, strict: bool = True) -> None:
    cfg = log.config
    n = cfg.n_agents
    grid = cfg.grid
    if len(log.manifest.initial_positions) != n:
        raise ConsistencyError(
            f"manifest has {len(log.manifest.initial_positions)} initial positions for {n} agents"
        )
    records = log.records
    if len(records) % n:
        counts: dict[int, int] = {}
        for r in records:
            counts[r.step] = counts.get(r.step, 0) + 1
        bad = sorted(s for s, c in counts.items() if c != n)
        raise ConsistencyError(f"step {bad[0]} has {counts[bad[0]]} records, expected {n}")
    for i, r in enumerate(records):
        step, agent = divmod(i, n)
        if r.step != step or r.agent_id != agent:
            raise ConsistencyError(
                f"record {i + 1} is (step {r.step}, agent {r.agent_id}); "
                f"expected (step {step}, agent {agent})"
            )
    if not strict:
        return
    prev = [Position(*p) for p in log.manifest.initial_positions]
    for s in range(log.n_steps):
        batch = log.records_at(s)
        crowded = sum(is_inside(p, grid) for p in prev) >= cfg.threshold_count
        for r in batch:
            where = f"step {r.step} agent {r.agent_id}"
            if r.pos_before != prev[r.agent_id]:
                raise ConsistencyError(f"{where}: pos_before does not continue the previous step")
            if r.pos_after != apply_action(r.pos_before, r.action, grid):
                raise ConsistencyError(f"{where}: pos_after inconsistent with action")
            if r.inside_after != is_inside(r.pos_after, grid):
                raise ConsistencyError(f"{where}: inside_after inconsistent with pos_after")
            if r.crowded_before != crowded:
                raise ConsistencyError(f"{where}: crowded_before inconsistent with attendance")
        prev = [r.pos_after for r in batch]


def build_log(
    config: SimConfig,
    initial_positions: Iterable[Position],
    records: Iterable[StepRecord],
    brain_kind: str = "synthetic",
) -> RunLog:
    """Assemble an in-memory RunLog (fixtures, tests, foreign data)."""
    manifest = RunManifest(
        config=config.to_dict(),
        initial_positions=[list(p) for p in initial_positions],
        brain_kind=brain_kind,
        status="complete",
    )
    records = tuple(records)
    manifest.steps_completed = len(records) // config.n_agents
    return RunLog(manifest=manifest, records=records)


def _action_between(a: Position, b: Position) -> Action:
    d = (b[0] - a[0], b[1] - a[1])
    for action in Action:
        if action.delta == d:
            return action
    raise ContractError(f"positions {tuple(a)} -> {tuple(b)} are not a unit move")


def log_from_trajectory(
    config: SimConfig,
    trajectory: Sequence[Sequence[Position]],
    messages: dict[tuple[int, int], str] | None = None,
    memories: dict[tuple[int, int], str] | None = None,
) -> RunLog:
    """Build a consistent RunLog from per-step positions.

    ``trajectory[k]`` holds every agent's position at world step k; actions are
    inferred from the unit displacements. ``messages`` / ``memories`` map
    (step, agent_id) to text.
    """
    grid = config.grid
    messages = messages or {}
    memories = memories or {}
    records = []
    for s in range(len(trajectory) - 1):
        before, after = trajectory[s], trajectory[s + 1]
        crowded = sum(is_inside(p, grid) for p in before) >= config.threshold_count
        for i, (a, b) in enumerate(zip(before, after)):
            records.append(
                make_record(
                    s, i, Position(*a), _action_between(a, b),
                    messages.get((s, i), ""), memories.get((s, i), ""), crowded, grid,
                )
            )
    return build_log(config, [Position(*p) for p in trajectory[0]], records)
