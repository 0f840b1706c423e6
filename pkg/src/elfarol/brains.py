"""Decision backends mapping an Observation to (message, memory, action).

``LlmBrain`` is the experimental backend. The scripted brains are
deterministic stand-ins used to exercise the engine and the analysis
pipeline without model calls; their pseudo-random draws are keyed on
(seed, agent, step) so every decision is a pure function of its inputs.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

import numpy as np

from .config import BrainSpec, SimConfig
from .errors import ConfigError, LlmError, MissingRecordError
from .llm_client import LlmClient, LlmConfig
from .prompt import AgentOutput, Observation, PromptTemplate, build_prompt, load_template, parse_response
from .world import Action, GridConfig, Position, apply_action, is_inside

if TYPE_CHECKING:
    from .recorder import RunLog

_SEED_MASK = (1 << 63) - 1


def keyed_uniform(seed: int, agent_id: int, step: int) -> float:
    """One uniform draw in [0, 1) from an agent's own stream at one step."""
    rng = np.random.default_rng([seed & _SEED_MASK, agent_id, step])
    return float(rng.random())


def toward_center(pos: Position, grid: GridConfig) -> Action:
    """Step along the axis with the larger offset to the bar centre; x wins ties."""
    cx, cy = grid.bar_center
    dx, dy = cx - pos[0], cy - pos[1]
    if dx == 0 and dy == 0:
        return Action.STAY
    if abs(dx) >= abs(dy):
        return Action.X_PLUS if dx > 0 else Action.X_MINUS
    return Action.Y_PLUS if dy > 0 else Action.Y_MINUS


def toward_exit(pos: Position, grid: GridConfig) -> Action:
    """For a cell inside the bar, the move that most reduces the depth to the wall."""
    lo, hi = grid.bar_min, grid.bar_max
    x, y = pos
    options = [
        (x - (lo.x - 1), Action.X_MINUS, lo.x - 1 >= 0),
        (hi.x + 1 - x, Action.X_PLUS, hi.x + 1 < grid.width),
        (y - (lo.y - 1), Action.Y_MINUS, lo.y - 1 >= 0),
        (hi.y + 1 - y, Action.Y_PLUS, hi.y + 1 < grid.height),
    ]
    reachable = [(d, a) for d, a, ok in options if ok]
    if not reachable:
        return Action.STAY
    return min(reachable, key=lambda t: t[0])[1]


class Brain:
    kind = "base"

    def decide(self, obs: Observation, step: int, agent_id: int) -> AgentOutput:
        raise NotImplementedError

    def decide_batch(self, observations: Sequence[Observation], step: int) -> list[AgentOutput]:
        return [self.decide(obs, step, i) for i, obs in enumerate(observations)]

    def stats(self) -> dict:
        return {}

    def close(self) -> None:
        pass


class GreedyToBar(Brain):
    kind = "greedy"

    def __init__(self, grid: GridConfig):
        self.grid = grid

    def decide(self, obs: Observation, step: int, agent_id: int) -> AgentOutput:
        if obs.inside:
            return AgentOutput(action=Action.STAY)
        return AgentOutput(action=toward_center(obs.pos, self.grid))


class ThresholdResponder(Brain):
    """Rational caricature: leave when told it is crowded, otherwise head in.

    Inside and uncomfortable, the agent steps toward the nearest exit with
    probability ``p_leave``; inside and comfortable it stays. Outside it walks
    toward the bar and takes the final step across the wall with probability
    ``p_enter`` (it has no way of knowing how full the bar is).
    """

    kind = "threshold"

    def __init__(self, grid: GridConfig, seed: int = 0, p_leave: float = 0.5, p_enter: float = 0.5):
        if not (0 <= p_leave <= 1 and 0 <= p_enter <= 1):
            raise ConfigError("responder probabilities must lie in [0, 1]")
        self.grid = grid
        self.seed = seed
        self.p_leave = p_leave
        self.p_enter = p_enter

    def decide(self, obs: Observation, step: int, agent_id: int) -> AgentOutput:
        grid = self.grid
        if obs.inside:
            if not obs.crowded_feedback:
                return AgentOutput(action=Action.STAY)
            if self.p_leave >= 1 or keyed_uniform(self.seed, agent_id, step) < self.p_leave:
                return AgentOutput(action=toward_exit(obs.pos, grid))
            return AgentOutput(action=Action.STAY)
        action = toward_center(obs.pos, grid)
        if is_inside(apply_action(obs.pos, action, grid), grid):
            if not (self.p_enter >= 1 or keyed_uniform(self.seed, agent_id, step) < self.p_enter):
                action = Action.STAY
        return AgentOutput(action=action)


class RandomWalk(Brain):
    kind = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def decide(self, obs: Observation, step: int, agent_id: int) -> AgentOutput:
        idx = int(keyed_uniform(self.seed, agent_id, step) * len(Action))
        return AgentOutput(action=list(Action)[idx])


class ReplayBrain(Brain):
    kind = "replay"

    def __init__(self, log: RunLog):
        self._outputs = {
            (r.step, r.agent_id): AgentOutput(message=r.message, memory=r.memory, action=r.action)
            for r in log.records
        }

    def decide(self, obs: Observation, step: int, agent_id: int) -> AgentOutput:
        try:
            return self._outputs[(step, agent_id)]
        except KeyError:
            raise MissingRecordError(f"no recorded output for agent {agent_id} at step {step}") from None


class LlmBrain(Brain):
    kind = "llm"

    def __init__(self, client: LlmClient, template: PromptTemplate):
        self.client = client
        self.template = template

    def decide(self, obs: Observation, step: int, agent_id: int) -> AgentOutput:
        result = self.client.complete(build_prompt(obs, self.template))
        return parse_response(result.text)

    def decide_batch(self, observations: Sequence[Observation], step: int) -> list[AgentOutput]:
        prompts = [build_prompt(obs, self.template) for obs in observations]
        results = self.client.complete_batch(prompts)
        for i, res in enumerate(results):
            if isinstance(res, LlmError):
                raise type(res)(f"agent {i} at step {step}: {res}") from res
        return [parse_response(r.text) for r in results]

    def stats(self) -> dict:
        return self.client.stats.as_dict()

    def close(self) -> None:
        self.client.close()


def make_brain(
    spec: BrainSpec,
    config: SimConfig,
    *,
    replay_log: RunLog | None = None,
    transcript_path=None,
    client: LlmClient | None = None,
) -> Brain:
    params = spec.params
    seed = int(params.get("seed", config.rng_seed))
    if spec.kind == "greedy":
        return GreedyToBar(config.grid)
    if spec.kind == "threshold":
        return ThresholdResponder(
            config.grid,
            seed=seed,
            p_leave=float(params.get("p_leave", 0.5)),
            p_enter=float(params.get("p_enter", 0.5)),
        )
    if spec.kind == "random":
        return RandomWalk(seed)
    if spec.kind == "replay":
        if replay_log is None:
            from .recorder import load

            replay_log = load(params["source"])
        return ReplayBrain(replay_log)
    if spec.kind == "llm":
        if client is None:
            client = LlmClient(LlmConfig.from_params(params), transcript_path=transcript_path)
        template = load_template(config.template_path, config.venue_name)
        return LlmBrain(client, template)
    raise ConfigError(f"unknown brain kind {spec.kind!r}")


def decide(brain: Brain, obs: Observation, step: int, agent_id: int) -> AgentOutput:
    return brain.decide(obs, step, agent_id)
