"""The step loop: snapshot, observe, decide for all agents, barrier, update, record."""

from __future__ import annotations

import logging
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .brains import Brain, ReplayBrain
from .config import SimConfig
from .errors import IncompleteRunError
from .prompt import InboxMessage, Observation, build_observation
from .recorder import (
    TRACE_NAME,
    RunManifest,
    TraceWriter,
    load,
    make_record,
    now_iso,
    read_manifest,
    write_manifest,
)
from .world import (
    Decision,
    Position,
    WorldState,
    attendance,
    initial_world,
    is_crowded,
    is_inside,
    neighbors,
    random_placement,
    step,
)

log = logging.getLogger(__name__)


def observe(world: WorldState, crowded: bool | None = None) -> list[Observation]:
    """What every agent sees at the current snapshot.

    The inbox holds what neighbours said at the previous step (their outbox),
    with neighbourhood taken from the current positions.
    """
    grid = world.grid
    if crowded is None:
        crowded = is_crowded(world)
    out = []
    for agent in world.agents:
        inbox = [
            InboxMessage(j, world.agents[j].name, world.agents[j].outbox)
            for j in sorted(neighbors(world, agent.id))
            if world.agents[j].outbox
        ]
        out.append(
            build_observation(
                agent.name,
                agent.pos,
                agent.memory,
                inbox,
                is_inside(agent.pos, grid),
                crowded,
            )
        )
    return out


def simulate(
    config: SimConfig,
    brain: Brain,
    run_dir: str | Path,
    *,
    initial_positions: Sequence[Position] | None = None,
    steps: int | None = None,
    on_step: Callable[[int, int], None] | None = None,
) -> Path:
    """Run ``steps`` (default ``config.max_steps``) synchronous steps into ``run_dir``.

    The manifest is written before step 0 and rewritten at the end; if a step
    fails the trace so far is kept and the manifest is marked incomplete.
    """
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    steps = config.max_steps if steps is None else steps
    positions = list(initial_positions) if initial_positions is not None else random_placement(config)
    world = initial_world(config, positions)
    grid = config.grid
    manifest = RunManifest(
        config=config.to_dict(),
        initial_positions=[list(p) for p in world.positions],
        brain_kind=brain.kind,
        start_time=now_iso(),
    )
    write_manifest(run_dir, manifest)

    with TraceWriter(run_dir / TRACE_NAME, grid) as sink:
        try:
            for t in range(steps):
                crowded = is_crowded(world)
                observations = observe(world, crowded)
                # decide_batch returns only once all N outputs exist
                outputs = brain.decide_batch(observations, t)
                for agent, out in zip(world.agents, outputs):
                    sink.append(
                        make_record(t, agent.id, agent.pos, out.action, out.message, out.memory, crowded, grid)
                    )
                world = step(world, [Decision(o.message, o.memory, o.action) for o in outputs])
                sink.flush()
                manifest.steps_completed = t + 1
                if on_step is not None:
                    on_step(world.step, attendance(world))
        except BaseException as exc:
            sink.flush()
            manifest.status = "incomplete"
            manifest.error = f"{type(exc).__name__}: {exc}"
            manifest.completion_stats = brain.stats()
            write_manifest(run_dir, manifest)
            raise

    manifest.status = "complete"
    manifest.completion_stats = brain.stats()
    write_manifest(run_dir, manifest)
    return run_dir


@dataclass(frozen=True)
class ReplayVerdict:
    ok: bool
    step: int | None = None
    agent_id: int | None = None
    detail: str = ""

    def __str__(self) -> str:
        if self.ok:
            return "OK"
        return f"MISMATCH step={self.step} agent={self.agent_id}: {self.detail}"


def replay(run_dir: str | Path) -> ReplayVerdict:
    """Re-execute a finished run from its own recorded outputs and diff the traces."""
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    if manifest.status != "complete":
        raise IncompleteRunError(f"{run_dir} is {manifest.status}; refusing to replay")
    recorded = load(run_dir, strict=False)
    config = manifest.sim_config
    with tempfile.TemporaryDirectory(prefix="elfarol-replay-") as tmp:
        simulate(
            config,
            ReplayBrain(recorded),
            tmp,
            initial_positions=[Position(*p) for p in manifest.initial_positions],
            steps=recorded.n_steps,
        )
        fresh = (Path(tmp) / TRACE_NAME).read_bytes()
    original = (run_dir / TRACE_NAME).read_bytes()
    if fresh == original:
        return ReplayVerdict(ok=True)
    a, b = original.splitlines(), fresh.splitlines()
    n = config.n_agents
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            s, agent = divmod(i, n)
            return ReplayVerdict(False, s, agent, f"recorded {x.decode()!s} != replayed {y.decode()!s}")
    i = min(len(a), len(b))
    s, agent = divmod(i, n)
    return ReplayVerdict(False, s, agent, f"trace lengths differ ({len(a)} vs {len(b)} lines)")
