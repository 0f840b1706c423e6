"""Word frequencies over agent messages, for venue-to-venue vocabulary comparison."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from ..recorder import RunLog

_SPLIT_RE = re.compile(r"\W+")


def default_stopwords() -> frozenset[str]:
    text = resources.files("elfarol").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    return parse_stopwords(text)


def parse_stopwords(text: str) -> frozenset[str]:
    words = (line.strip().lower() for line in text.splitlines())
    return frozenset(w for w in words if w and not w.startswith("#"))


def load_stopwords(spec: str | Path | None) -> frozenset[str]:
    """``None`` or ``"default"`` gives the shipped list, ``"none"`` an empty set, else a file."""
    if spec is None or str(spec) == "default":
        return default_stopwords()
    if str(spec) == "none":
        return frozenset()
    return parse_stopwords(Path(spec).read_text(encoding="utf-8"))


def tokenize(text: str) -> list[str]:
    return [t for t in _SPLIT_RE.split(text.lower()) if t]


@dataclass(frozen=True)
class TokenFrequency:
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def ranked(self) -> list[tuple[str, int]]:
        """Tokens by descending count, ties alphabetical."""
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))

    def rank(self, token: str) -> int | None:
        token = token.lower()
        for i, (t, _) in enumerate(self.ranked(), 1):
            if t == token:
                return i
        return None

    def relative(self, token: str) -> float:
        total = self.total
        return self.counts.get(token.lower(), 0) / total if total else 0.0


def count_tokens(messages: Iterable[str], stopwords: Iterable[str] = ()) -> TokenFrequency:
    stop = frozenset(w.lower() for w in stopwords)
    counter: Counter[str] = Counter()
    for msg in messages:
        counter.update(t for t in tokenize(msg) if t not in stop)
    return TokenFrequency(dict(counter))


def token_frequencies(logs: Sequence[RunLog], stopwords: Iterable[str] = ()) -> TokenFrequency:
    return count_tokens((r.message for log in logs for r in log.records), stopwords)


@dataclass(frozen=True)
class TokenComparisonRow:
    token: str
    rank_a: int | None
    relative_a: float
    count_a: int
    rank_b: int | None
    relative_b: float
    count_b: int


def compare_tokens(
    a: TokenFrequency, b: TokenFrequency, queries: Sequence[str]
) -> list[TokenComparisonRow]:
    return [
        TokenComparisonRow(
            q.lower(),
            a.rank(q),
            a.relative(q),
            a.counts.get(q.lower(), 0),
            b.rank(q),
            b.relative(q),
            b.counts.get(q.lower(), 0),
        )
        for q in queries
    ]
