"""Generated resolution samples and their projections onto the MD/MR/MDMR row formats."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from ..core import ContextSnapshot, ConversationTurn, Entity, Speaker
from ..text import normalize, tokens


@dataclass
class GoldMention:
    start: int
    end: int
    gold_ids: list[str]
    ref: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"start": self.start, "end": self.end, "gold_ids": list(self.gold_ids), "ref": self.ref}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> GoldMention:
        return cls(int(d["start"]), int(d["end"]), list(d["gold_ids"]), dict(d.get("ref", {})))


@dataclass
class ResolutionSample:
    """One request with its context, gold mentions and the referent predicate of each."""

    utterance: str
    mentions: list[GoldMention]
    entities: list[Entity]
    turns: list[ConversationTurn] = field(default_factory=list)
    variant: str = ""
    template: str = ""

    @property
    def tokens(self) -> list[str]:
        return tokens(self.utterance)

    @property
    def spans(self) -> list[tuple[int, int]]:
        return [(m.start, m.end) for m in self.mentions]

    @property
    def gold_ids(self) -> set[str]:
        return {i for m in self.mentions for i in m.gold_ids}

    def snapshot(self) -> ContextSnapshot:
        return ContextSnapshot(tuple(self.turns), tuple(self.entities), self.utterance)

    def key(self) -> tuple:
        """Identity used for split disjointness: the request plus its candidate set."""
        ents = tuple(sorted((e.category.value, e.texts, e.location.to_dict().__repr__(), e.source.value)
                            for e in self.entities))
        return (normalize(self.utterance), ents, tuple(normalize(t.utterance) for t in self.turns))

    def to_dict(self) -> dict[str, Any]:
        return {
            "utterance": self.utterance,
            "spans": [{"start": s, "end": e} for s, e in self.spans],
            "mentions": [m.to_dict() for m in self.mentions],
            "entities": [e.to_dict() for e in self.entities],
            "turns": [t.to_dict() for t in self.turns],
            "variant": self.variant,
            "template": self.template,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ResolutionSample:
        return cls(
            utterance=d["utterance"],
            mentions=[GoldMention.from_dict(m) for m in d.get("mentions", ())],
            entities=[Entity.from_dict(e) for e in d.get("entities", ())],
            turns=[ConversationTurn.from_dict(t) for t in d.get("turns", ())],
            variant=d.get("variant", ""),
            template=d.get("template", ""),
        )

    def md_row(self) -> dict[str, Any]:
        return {
            "utterance": self.utterance,
            "spans": [{"start": s, "end": e} for s, e in self.spans],
            "entities": [e.to_dict() for e in self.entities],
        }

    def mr_rows(self) -> list[dict[str, Any]]:
        return [
            {
                "request": self.utterance,
                "mention": {"start": m.start, "end": m.end},
                "candidates": [e.to_dict() for e in self.entities],
                "gold_ids": list(m.gold_ids),
            }
            for m in self.mentions
        ]


class Utterance:
    """Builds an utterance from plain and mention segments, tracking token spans."""

    def __init__(self) -> None:
        self.parts: list[str] = []
        self.n_tokens = 0
        self.mentions: list[GoldMention] = []

    def add(self, text: str) -> Utterance:
        if text:
            self.parts.append(text)
            self.n_tokens += len(tokens(text))
        return self

    def mention(self, text: str, gold_ids: Sequence[str], ref: dict[str, Any]) -> Utterance:
        start = self.n_tokens
        self.add(text)
        self.mentions.append(GoldMention(start, self.n_tokens, list(gold_ids), ref))
        return self

    def text(self) -> str:
        return " ".join(self.parts)


def fill(template: str, rng: random.Random, gold_ids: Sequence[str], ref: dict[str, Any],
         mention: str, **slots: str) -> Utterance:
    """Render ``template`` where ``{m}`` marks the mention and other ``{name}`` are plain slots."""
    before, _, after = template.partition("{m}")
    u = Utterance()
    u.add(before.format(**slots).strip())
    u.mention(mention, gold_ids, ref)
    u.add(after.format(**slots).strip())
    return u


def agent_turn(text: str, ordinal: int, ids: Sequence[str] = ()) -> ConversationTurn:
    return ConversationTurn(Speaker.AGENT, text, tuple(ids), ordinal)


def user_turn(text: str, ordinal: int) -> ConversationTurn:
    return ConversationTurn(Speaker.USER, text, (), ordinal)
