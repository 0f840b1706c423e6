from __future__ import annotations

import json
import re

import pytest

from elfarol.analysis import attendance_series, crowding_time
from elfarol.brains import Brain, LlmBrain, RandomWalk, ThresholdResponder, make_brain
from elfarol.config import BrainSpec
from elfarol.errors import IncompleteRunError, TransportError
from elfarol.llm_client import CompletionResult
from elfarol.prompt import AgentOutput, PromptTemplate
from elfarol.recorder import TRACE_NAME, load, read_manifest
from elfarol.runner import observe, replay, simulate
from elfarol.world import Action, Position, apply_action, signed_boundary_distance

from conftest import place


class ScriptedClient:
    """Stands in for LlmClient; replies are a function of the prompt and call count."""

    def __init__(self, reply):
        self.reply = reply
        self.prompts: list[list[str]] = []

    def complete_batch(self, prompts):
        self.prompts.append(list(prompts))
        step = len(self.prompts) - 1
        return [CompletionResult(self.reply(step, i, p), 0, 0, 0.0, 1) for i, p in enumerate(prompts)]

    def close(self):
        pass

    @property
    def stats(self):
        class _S:
            def as_dict(self):
                return {}

        return _S()


def test_memory_feedback_loop(tmp_path, small_config):
    client = ScriptedClient(lambda s, i, p: f"Message: m{s}\nMemory: remember-{s}-{i}\nAction: stay")
    simulate(small_config, LlmBrain(client, PromptTemplate()), tmp_path, steps=3)
    for s in (1, 2):
        for i, prompt in enumerate(client.prompts[s]):
            assert f"Previous Memory: remember-{s - 1}-{i}" in prompt
    assert all("Previous Memory: none" in p for p in client.prompts[0])


def test_messages_reach_neighbours_only(tmp_path, small_config):
    cfg = small_config.with_overrides(n_agents=3)
    client = ScriptedClient(lambda s, i, p: f"Message: from{i}\nMemory: \nAction: stay")
    positions = [Position(0, 0), Position(0, 4), Position(9, 9)]
    simulate(cfg, LlmBrain(client, PromptTemplate()), tmp_path, initial_positions=positions, steps=2)
    step1 = client.prompts[1]
    assert "Agent1: from1" in step1[0] and "Agent0: from0" in step1[1]
    assert "Nearby Agents' Message: none" in step1[2]
    assert "from" not in step1[0].split("Nearby Agents' Message:")[1].replace("Agent1: from1", "")


def test_inbox_uses_previous_outbox(small_config):
    cfg = small_config.with_overrides(n_agents=2)
    world = place(cfg, [(0, 0), (1, 0)])
    assert observe(world)[0].inbox == ()


def test_crowded_flag_hidden_outside(default_config):
    world = place(default_config, [(25, 25)] * 12 + [(0, 0)] * 8)
    obs = observe(world)
    assert obs[0].crowded_feedback is True and obs[19].crowded_feedback is None


def test_records_use_pre_step_snapshot(tmp_path, default_config):
    # 12 inside at step 0, all leave simultaneously; crowded_before is identical for all
    positions = [Position(20, 20 + i) for i in range(10)] + [Position(21, 20), Position(21, 21)]
    positions += [Position(i, 0) for i in range(8)]
    run = simulate(default_config, ThresholdResponder(default_config.grid, p_leave=1.0, p_enter=0.0), tmp_path,
                   initial_positions=positions, steps=2)
    log = load(run)
    step0 = log.records_at(0)
    assert all(r.crowded_before for r in step0)
    assert sum(r.inside_after for r in step0) == 1  # the agent at (21, 21) is depth 2
    assert not any(r.crowded_before for r in log.records_at(1))


def test_reproducible_and_replayable(tmp_path, default_config):
    cfg = default_config.with_overrides(rng_seed=42)
    a = simulate(cfg, RandomWalk(42), tmp_path / "a", steps=30)
    b = simulate(cfg, RandomWalk(42), tmp_path / "b", steps=30)
    assert (a / TRACE_NAME).read_bytes() == (b / TRACE_NAME).read_bytes()
    assert replay(a).ok


def test_replay_detects_tamper(tmp_path, default_config):
    run = simulate(default_config, RandomWalk(1), tmp_path, steps=10)
    lines = (run / TRACE_NAME).read_text().splitlines()
    target = 5 * 20 + 7
    d = json.loads(lines[target])
    before = Position(*d["pos_before"])
    d["action"] = next(
        a.value for a in Action if apply_action(before, a, default_config.grid) != Position(*d["pos_after"])
    )
    lines[target] = json.dumps(d, ensure_ascii=False)
    (run / TRACE_NAME).write_text("\n".join(lines) + "\n")
    verdict = replay(run)
    assert not verdict.ok and (verdict.step, verdict.agent_id) == (5, 7)


class FailingBrain(Brain):
    kind = "failing"

    def decide_batch(self, observations, step):
        if step == 3:
            raise TransportError("upstream gone")
        return [AgentOutput(action=Action.STAY) for _ in observations]


def test_failure_marks_run_incomplete(tmp_path, small_config):
    with pytest.raises(TransportError):
        simulate(small_config, FailingBrain(), tmp_path, steps=10)
    manifest = read_manifest(tmp_path)
    assert manifest.status == "incomplete" and manifest.steps_completed == 3
    assert re.search("upstream gone", manifest.error)
    assert load(tmp_path).n_steps == 3
    with pytest.raises(IncompleteRunError):
        replay(tmp_path)


def test_threshold_attendance_band(tmp_path, default_config):
    cfg = default_config.with_overrides(brain=BrainSpec("threshold"), rng_seed=3)
    log = load(simulate(cfg, make_brain(cfg.brain, cfg), tmp_path, steps=600))
    series = attendance_series(log)
    t_b = crowding_time(log)
    # agents one cell either side of the wall when crowding first occurs
    b = sum(abs(signed_boundary_distance(tuple(p), cfg.grid)) <= 1 for p in log.positions[t_b].tolist())
    after = series[200:]
    assert cfg.threshold_count - cfg.n_agents <= min(after)
    assert max(after) <= cfg.threshold_count + b
