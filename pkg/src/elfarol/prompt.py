"""Per-agent prompt rendering and reply parsing.

The default prompt has an environment preamble, one status line chosen by the
agent's situation, four labelled state fields, then output instructions.
Override it with a template file (see :func:`load_template`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from string import Template
from typing import NamedTuple, Sequence

from .errors import ConfigError, ContractError
from .world import Action, Position

NONE_MARKER = "none"

DEFAULT_PREAMBLE = (
    "You are an agent in a two-dimensional space. There is $venue in this space.\n"
    "You can talk with other agents near you."
)
DEFAULT_STATUS = {
    "inside_comfortable": "You are inside $venue. It is comfortable in $venue now.",
    "inside_uncomfortable": "You are inside $venue. It is crowded and uncomfortable in $venue now.",
    "outside": "You are outside $venue.",
}
DEFAULT_INSTRUCTIONS = (
    "Based on the above, generate a message to nearby agents, a memory to keep for "
    "the next step, and your next action.\n"
    "Reply in exactly this form:\n"
    "Message: <your message>\n"
    "Memory: <your memory>\n"
    "Action: <one of x+1 / x-1 / y+1 / y-1 / stay>"
)
DEFAULT_BODY = (
    "$preamble\n"
    "$status\n"
    "Name: $name\n"
    "Current Position: $position\n"
    "Previous Memory: $memory\n"
    "Nearby Agents' Message: $messages\n"
    "$instructions"
)

STATE_LABELS = ("Name:", "Current Position:", "Previous Memory:", "Nearby Agents' Message:")


class InboxMessage(NamedTuple):
    sender_id: int
    sender_name: str
    text: str


@dataclass(frozen=True)
class Observation:
    agent_name: str
    pos: Position
    previous_memory: str
    inbox: tuple[InboxMessage, ...]
    inside: bool
    crowded_feedback: bool | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "inbox", tuple(self.inbox))


@dataclass(frozen=True)
class AgentOutput:
    message: str = ""
    memory: str = ""
    action: Action = Action.STAY


@dataclass(frozen=True)
class PromptTemplate:
    venue_name: str = "El Farol Bar"
    preamble: str = DEFAULT_PREAMBLE
    status_lines: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_STATUS))
    instructions: str = DEFAULT_INSTRUCTIONS
    body: str = DEFAULT_BODY

    def __post_init__(self) -> None:
        missing = set(DEFAULT_STATUS) - set(self.status_lines)
        if missing:
            raise ConfigError(f"template is missing status lines: {sorted(missing)}")


def build_prompt(obs: Observation, template: PromptTemplate | None = None) -> str:
    template = template or PromptTemplate()
    if obs.inside and obs.crowded_feedback is None:
        raise ContractError("an agent inside the venue must receive comfort feedback")
    if not obs.inside and obs.crowded_feedback is not None:
        raise ContractError("comfort feedback is only given to agents inside the venue")

    if not obs.inside:
        status_key = "outside"
    elif obs.crowded_feedback:
        status_key = "inside_uncomfortable"
    else:
        status_key = "inside_comfortable"

    venue = {"venue": template.venue_name}
    inbox = sorted(obs.inbox, key=lambda m: m.sender_id)
    if inbox:
        messages = "\n" + "\n".join(f"{m.sender_name}: {m.text}" for m in inbox)
    else:
        messages = NONE_MARKER

    return Template(template.body).safe_substitute(
        preamble=Template(template.preamble).safe_substitute(venue),
        status=Template(template.status_lines[status_key]).safe_substitute(venue),
        name=obs.agent_name,
        position=f"({obs.pos[0]}, {obs.pos[1]})",
        memory=obs.previous_memory or NONE_MARKER,
        messages=messages,
        instructions=Template(template.instructions).safe_substitute(venue),
        venue=template.venue_name,
    )


_SECTION_RE = re.compile(r"^\W*(message|memory|action)\W*?\s*:", re.IGNORECASE | re.MULTILINE)
_DECORATION = "*_`#>\"'()[]{}<>.,;:!?~ \t\r\n"
_TOKEN_RE = re.compile(r"(?<![\w+\-])(x\s*[+\-]\s*1|y\s*[+\-]\s*1|stay)(?!\w)", re.IGNORECASE)


def _clean(text: str) -> str:
    text = text.strip()
    # drop a dangling markdown emphasis closer such as "**" left behind the header
    return re.sub(r"^[*_]+\s*", "", text).strip()


def _match_action(text: str) -> Action:
    text = text.replace("−", "-")
    bare = text.strip(_DECORATION).lower().replace(" ", "")
    for action in Action:
        if bare == action.value:
            return action
    m = _TOKEN_RE.search(text)
    if m:
        return Action(re.sub(r"\s+", "", m.group(1).lower()))
    return Action.STAY


def parse_response(text: str | bytes) -> AgentOutput:
    """Extract labelled Message / Memory / Action sections from a model reply.

    Headers are matched at line starts, case-insensitively, ignoring markdown
    decoration. Anything unparseable falls back to empty text and ``stay``.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    sections: dict[str, str] = {}
    matches = list(_SECTION_RE.finditer(text))
    for i, m in enumerate(matches):
        key = m.group(1).lower()
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        sections.setdefault(key, text[m.end():end])
    action = _match_action(sections["action"]) if "action" in sections else Action.STAY
    return AgentOutput(
        message=_clean(sections.get("message", "")),
        memory=_clean(sections.get("memory", "")),
        action=action,
    )


def render_reply(output: AgentOutput) -> str:
    """Format an output the way the prompt asks the model to reply."""
    return f"Message: {output.message}\nMemory: {output.memory}\nAction: {output.action.value}"


_TEMPLATE_SECTIONS = {"body", "preamble", "instructions", *(f"status.{k}" for k in DEFAULT_STATUS)}
_HEADER_RE = re.compile(r"^\[(body|preamble|instructions|status\.[a-z_]+)\]\s*$")


def parse_template(text: str, venue_name: str = "El Farol Bar") -> PromptTemplate:
    """Parse a template override.

    The file is plain text split into sections by header lines such as
    ``[body]``, ``[preamble]``, ``[instructions]``, ``[status.outside]``,
    ``[status.inside_comfortable]`` and ``[status.inside_uncomfortable]``.
    Sections left out keep their defaults. Text before the first header is
    treated as ``[body]``. Placeholders use ``$name`` syntax: ``$venue``,
    ``$preamble``, ``$status``, ``$name``, ``$position``, ``$memory``,
    ``$messages``, ``$instructions``.
    """
    parts: dict[str, list[str]] = {}
    current = "body"
    for line in text.splitlines():
        m = _HEADER_RE.match(line)
        if m:
            current = m.group(1)
            if current not in _TEMPLATE_SECTIONS:
                raise ConfigError(f"unknown template section [{current}]")
            parts[current] = []
            continue
        parts.setdefault(current, []).append(line)
    values = {k: "\n".join(v).strip("\n") for k, v in parts.items() if "\n".join(v).strip()}
    status = dict(DEFAULT_STATUS)
    for key in DEFAULT_STATUS:
        if f"status.{key}" in values:
            status[key] = values[f"status.{key}"]
    return PromptTemplate(
        venue_name=venue_name,
        preamble=values.get("preamble", DEFAULT_PREAMBLE),
        status_lines=status,
        instructions=values.get("instructions", DEFAULT_INSTRUCTIONS),
        body=values.get("body", DEFAULT_BODY),
    )


def load_template(path: str | Path | None, venue_name: str = "El Farol Bar") -> PromptTemplate:
    if path is None:
        return PromptTemplate(venue_name=venue_name)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read template {path}: {exc}") from exc
    return parse_template(text, venue_name)


def build_observation(
    agent_name: str,
    pos: Position,
    previous_memory: str,
    inbox: Sequence[InboxMessage],
    inside: bool,
    crowded: bool,
) -> Observation:
    """Observation with the comfort flag hidden from agents outside."""
    return Observation(
        agent_name=agent_name,
        pos=pos,
        previous_memory=previous_memory,
        inbox=tuple(sorted(inbox, key=lambda m: m.sender_id)),
        inside=inside,
        crowded_feedback=crowded if inside else None,
    )
