"""Domain types shared by every stage, plus the in-memory dialog context store.

All value types are frozen dataclasses so a :class:`ContextSnapshot` can be
handed to several worker threads without copying. Each type has a
``to_dict``/``from_dict`` pair producing the JSON wire format.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Iterable, Mapping

DEFAULT_TURN_WINDOW = 6
_EPS = 1e-9


class ContextError(ValueError):
    """Raised when a value violates a domain invariant."""


class Category(str, enum.Enum):
    PHONE_NUMBER = "phone_number"
    EMAIL = "email"
    ADDRESS = "address"
    URL = "url"
    BUSINESS = "business"
    PERSON = "person"
    MUSIC = "music"
    MOVIE = "movie"
    ALARM = "alarm"
    TIMER = "timer"
    NOTIFICATION = "notification"
    OTHER = "other"


CATEGORIES: tuple[Category, ...] = tuple(Category)


class Source(str, enum.Enum):
    SCREEN = "screen"
    CONVERSATIONAL = "conversational"
    BACKGROUND = "background"


class Speaker(str, enum.Enum):
    USER = "user"
    AGENT = "agent"


class Provenance(str, enum.Enum):
    MODEL = "model"
    RULE = "rule"


class RewriteClass(str, enum.Enum):
    AER = "AER"
    CBR = "CbR"
    NONE = "None"


@dataclass(frozen=True)
class BoundingBox:
    """Normalized screen rectangle, top-left origin."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ContextError(f"bounding box needs positive size, got w={self.w} h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ContextError(f"bounding box origin must be non-negative, got ({self.x}, {self.y})")
        if self.x + self.w > 1 + _EPS or self.y + self.h > 1 + _EPS:
            raise ContextError("bounding box extends past the screen")

    @property
    def center_x(self) -> float:
        return self.x + self.w / 2

    @property
    def center_y(self) -> float:
        return self.y + self.h / 2

    def to_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> BoundingBox:
        return cls(float(d["x"]), float(d["y"]), float(d["w"]), float(d["h"]))


@dataclass(frozen=True)
class EntityLocation:
    """Either a screen box, a 1-based position in a presented list, or nothing."""

    screen_box: BoundingBox | None = None
    list_index: int | None = None
    list_length: int | None = None

    def __post_init__(self) -> None:
        has_list = self.list_index is not None or self.list_length is not None
        if self.screen_box is not None and has_list:
            raise ContextError("location is either a screen box or a list position, not both")
        if has_list:
            if self.list_index is None or self.list_length is None:
                raise ContextError("list_index and list_length must be given together")
            if not 1 <= self.list_index <= self.list_length:
                raise ContextError(
                    f"list_index {self.list_index} outside 1..{self.list_length}"
                )

    @property
    def kind(self) -> str:
        if self.screen_box is not None:
            return "screen"
        if self.list_index is not None:
            return "list"
        return "none"

    def to_dict(self) -> dict[str, Any]:
        if self.screen_box is not None:
            return {"screen_box": self.screen_box.to_dict()}
        if self.list_index is not None:
            return {"list_index": self.list_index, "list_length": self.list_length}
        return {}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any] | None) -> EntityLocation:
        if not d:
            return cls()
        box = d.get("screen_box")
        return cls(
            screen_box=BoundingBox.from_dict(box) if box is not None else None,
            list_index=d.get("list_index"),
            list_length=d.get("list_length"),
        )


@dataclass(frozen=True)
class Entity:
    id: str
    category: Category
    texts: tuple[str, ...]
    location: EntityLocation = field(default_factory=EntityLocation)
    source: Source = Source.SCREEN
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "category", Category(self.category))
        object.__setattr__(self, "source", Source(self.source))
        object.__setattr__(self, "texts", tuple(self.texts))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))
        if not self.id:
            raise ContextError("entity id must be non-empty")
        if not self.texts or not all(isinstance(t, str) and t for t in self.texts):
            raise ContextError(f"entity {self.id!r} needs at least one non-empty text")
        if self.source is Source.SCREEN and self.location.screen_box is None:
            raise ContextError(f"screen entity {self.id!r} has no bounding box")
        if self.source is Source.BACKGROUND and self.location.kind != "none":
            raise ContextError(f"background entity {self.id!r} cannot have a location")
        if self.source is not Source.SCREEN and self.location.screen_box is not None:
            raise ContextError(f"only screen entities carry bounding boxes ({self.id!r})")

    def __hash__(self) -> int:
        return hash((self.id, self.category, self.texts, self.location, self.source,
                     tuple(sorted(self.metadata.items()))))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Entity):
            return NotImplemented
        return (
            self.id == other.id
            and self.category == other.category
            and self.texts == other.texts
            and self.location == other.location
            and self.source == other.source
            and dict(self.metadata) == dict(other.metadata)
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "category": self.category.value,
            "texts": list(self.texts),
            "location": self.location.to_dict(),
            "source": self.source.value,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Entity:
        try:
            return cls(
                id=str(d["id"]),
                category=Category(d["category"]),
                texts=tuple(d["texts"]),
                location=EntityLocation.from_dict(d.get("location")),
                source=Source(d.get("source", "screen")),
                metadata={str(k): str(v) for k, v in (d.get("metadata") or {}).items()},
            )
        except (KeyError, TypeError) as exc:
            raise ContextError(f"malformed entity: {exc}") from exc


@dataclass(frozen=True)
class ConversationTurn:
    speaker: Speaker
    utterance: str
    presented_entity_ids: tuple[str, ...] = ()
    ordinal: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "speaker", Speaker(self.speaker))
        object.__setattr__(self, "presented_entity_ids", tuple(self.presented_entity_ids))

    def to_dict(self) -> dict[str, Any]:
        return {
            "speaker": self.speaker.value,
            "utterance": self.utterance,
            "presented_entity_ids": list(self.presented_entity_ids),
            "ordinal": self.ordinal,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ConversationTurn:
        try:
            return cls(
                speaker=Speaker(d["speaker"]),
                utterance=str(d["utterance"]),
                presented_entity_ids=tuple(d.get("presented_entity_ids", ())),
                ordinal=int(d.get("ordinal", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ContextError(f"malformed turn: {exc}") from exc


@dataclass(frozen=True)
class ContextSnapshot:
    turns: tuple[ConversationTurn, ...] = ()
    entities: tuple[Entity, ...] = ()
    current_utterance: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "turns", tuple(self.turns))
        object.__setattr__(self, "entities", tuple(self.entities))
        ids = [e.id for e in self.entities]
        if len(set(ids)) != len(ids):
            raise ContextError("entity ids must be unique within a snapshot")
        ordinals = [t.ordinal for t in self.turns]
        if any(b <= a for a, b in zip(ordinals, ordinals[1:])):
            raise ContextError("turns must be ordered by strictly increasing ordinal")

    def entity(self, entity_id: str) -> Entity:
        for e in self.entities:
            if e.id == entity_id:
                return e
        raise KeyError(entity_id)

    def to_dict(self) -> dict[str, Any]:
        return {
            "turns": [t.to_dict() for t in self.turns],
            "entities": [e.to_dict() for e in self.entities],
            "current_utterance": self.current_utterance,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ContextSnapshot:
        if not isinstance(d, Mapping):
            raise ContextError("snapshot must be a JSON object")
        turns = [ConversationTurn.from_dict(t) for t in d.get("turns", ())]
        # Wire payloads may omit ordinals; number them in order.
        if turns and all(t.ordinal == 0 for t in turns):
            turns = [
                ConversationTurn(t.speaker, t.utterance, t.presented_entity_ids, i + 1)
                for i, t in enumerate(turns)
            ]
        return cls(
            turns=tuple(turns),
            entities=tuple(Entity.from_dict(e) for e in d.get("entities", ())),
            current_utterance=str(d.get("current_utterance", "")),
        )


@dataclass(frozen=True)
class Mention:
    start: int
    end: int
    text: str
    provenance: Provenance = Provenance.MODEL
    score: float = 1.0
    rule_candidate_entity: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        if not 0 <= self.start < self.end:
            raise ContextError(f"invalid mention span [{self.start}, {self.end})")

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def to_dict(self) -> dict[str, Any]:
        return {
            "start": self.start,
            "end": self.end,
            "text": self.text,
            "provenance": self.provenance.value,
            "score": self.score,
            "rule_candidate_entity": self.rule_candidate_entity,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Mention:
        return cls(
            start=int(d["start"]),
            end=int(d["end"]),
            text=str(d.get("text", "")),
            provenance=Provenance(d.get("provenance", "model")),
            score=float(d.get("score", 1.0)),
            rule_candidate_entity=d.get("rule_candidate_entity"),
        )


@dataclass(frozen=True)
class Resolution:
    mention: Mention
    matches: tuple[tuple[str, float], ...] = ()
    resolver: Provenance = Provenance.RULE

    def __post_init__(self) -> None:
        object.__setattr__(self, "resolver", Provenance(self.resolver))
        object.__setattr__(self, "matches", tuple((str(i), float(s)) for i, s in self.matches))

    @property
    def entity_ids(self) -> list[str]:
        return [i for i, _ in self.matches]

    def to_dict(self) -> dict[str, Any]:
        return {
            "mention": self.mention.to_dict(),
            "matches": [{"entity_id": i, "score": s} for i, s in self.matches],
            "resolver": self.resolver.value,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Resolution:
        return cls(
            mention=Mention.from_dict(d["mention"]),
            matches=tuple((m["entity_id"], m["score"]) for m in d.get("matches", ())),
            resolver=Provenance(d.get("resolver", "rule")),
        )


@dataclass(frozen=True)
class UnderstandingOutput:
    original_utterance: str
    rewritten_utterance: str
    rewrite_class: RewriteClass
    resolutions: tuple[Resolution, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rewrite_class", RewriteClass(self.rewrite_class))
        object.__setattr__(self, "resolutions", tuple(self.resolutions))
        if (
            self.rewrite_class is RewriteClass.NONE
            and self.rewritten_utterance != self.original_utterance
        ):
            raise ContextError("pass-through output must equal the original utterance")

    def to_dict(self) -> dict[str, Any]:
        return {
            "original_utterance": self.original_utterance,
            "rewritten_utterance": self.rewritten_utterance,
            "rewrite_class": self.rewrite_class.value,
            "resolutions": [r.to_dict() for r in self.resolutions],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> UnderstandingOutput:
        return cls(
            original_utterance=d["original_utterance"],
            rewritten_utterance=d["rewritten_utterance"],
            rewrite_class=RewriteClass(d["rewrite_class"]),
            resolutions=tuple(Resolution.from_dict(r) for r in d.get("resolutions", ())),
        )


class DialogStore:
    """Single-writer store of recent turns and live candidate entities.

    Only the most recent ``window`` turns are kept. Entities stay live until
    retired explicitly; :meth:`snapshot` freezes the current state.
    """

    def __init__(self, window: int = DEFAULT_TURN_WINDOW):
        if window < 1:
            raise ValueError("turn window must be at least 1")
        self.window = window
        self._turns: list[ConversationTurn] = []
        self._entities: dict[str, Entity] = {}
        self._last_ordinal = 0

    @property
    def turns(self) -> tuple[ConversationTurn, ...]:
        return tuple(self._turns)

    @property
    def entities(self) -> tuple[Entity, ...]:
        return tuple(self._entities.values())

    @property
    def last_ordinal(self) -> int:
        return self._last_ordinal

    def append_turn(self, turn: ConversationTurn) -> DialogStore:
        if turn.ordinal <= self._last_ordinal:
            raise ContextError(
                f"turn ordinal {turn.ordinal} must exceed last stored ordinal {self._last_ordinal}"
            )
        missing = [i for i in turn.presented_entity_ids if i not in self._entities]
        if missing:
            raise ContextError(f"turn presents unregistered entities: {missing}")
        self._turns.append(turn)
        self._last_ordinal = turn.ordinal
        if len(self._turns) > self.window:
            del self._turns[: len(self._turns) - self.window]
        return self

    def register_entities(self, entities: Iterable[Entity]) -> DialogStore:
        entities = list(entities)
        ids = [e.id for e in entities]
        dupes = {i for i in ids if i in self._entities or ids.count(i) > 1}
        if dupes:
            raise ContextError(f"duplicate entity ids: {sorted(dupes)}")
        for e in entities:
            self._entities[e.id] = e
        return self

    def retire_entities(self, ids: Iterable[str]) -> DialogStore:
        for i in ids:
            self._entities.pop(i, None)
        return self

    def snapshot(self, current_utterance: str) -> ContextSnapshot:
        return ContextSnapshot(
            turns=tuple(self._turns),
            entities=tuple(self._entities.values()),
            current_utterance=current_utterance,
        )
