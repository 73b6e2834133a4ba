"""High-precision resolution rules: detector passthrough, ordinals, verb keywords.

Every rule either names exactly one entity or stays silent. Silence (``None``)
hands the mention to the learned resolver.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import Category, ConversationTurn, Entity, Mention, Provenance, Resolution
from .text import normalize

ORDINAL_WORDS = {
    "first": 1, "second": 2, "third": 3, "fourth": 4, "fifth": 5,
    "sixth": 6, "seventh": 7, "eighth": 8, "ninth": 9, "tenth": 10,
}
_ORD = "|".join(ORDINAL_WORDS)

# (pattern, resolver) where resolver maps (match, list_length) -> 1-based index.
# Matches are ranked by matched length, so "second to last" beats "second" and "last".
ORDINAL_PATTERNS: tuple[tuple[re.Pattern[str], object], ...] = (
    (re.compile(rf"\b(?:{_ORD}) (?:to )?last\b"), lambda m, n: n + 1 - ORDINAL_WORDS[m.group(0).split()[0]]),
    (re.compile(r"\blast\b"), lambda m, n: n),
    (re.compile(rf"\b(?:{_ORD})\b"), lambda m, n: ORDINAL_WORDS[m.group(0)]),
    (re.compile(r"\b(\d+)(?:st|nd|rd|th)\b"), lambda m, n: int(m.group(1))),
    (re.compile(r"\bnumber (\d+)\b"), lambda m, n: int(m.group(1))),
    (re.compile(r"\b(?:top|upper)(?: one)?\b|\bat the top\b"), lambda m, n: 1),
    (re.compile(r"\b(?:bottom|lower)(?: one)?\b|\bat the bottom\b"), lambda m, n: n),
)

SCREEN_SPATIAL = {
    "top": ("y", min), "upper": ("y", min), "bottom": ("y", max), "lower": ("y", max),
    "left": ("x", min), "right": ("x", max),
}

# Each keyword is a set of tokens that must all appear in the request.
KEYWORD_CATEGORIES: tuple[tuple[frozenset[str], frozenset[Category]], ...] = (
    (frozenset({"play"}), frozenset({Category.MUSIC, Category.MOVIE})),
    (frozenset({"pause"}), frozenset({Category.MUSIC, Category.MOVIE})),
    (frozenset({"resume"}), frozenset({Category.MUSIC, Category.MOVIE})),
    (frozenset({"call"}), frozenset({Category.PHONE_NUMBER, Category.BUSINESS})),
    (frozenset({"dial"}), frozenset({Category.PHONE_NUMBER, Category.BUSINESS})),
    (frozenset({"stop"}), frozenset({Category.ALARM, Category.TIMER})),
    (frozenset({"switch", "off"}), frozenset({Category.ALARM, Category.TIMER})),
    (frozenset({"turn", "off"}), frozenset({Category.ALARM, Category.TIMER})),
    (frozenset({"snooze"}), frozenset({Category.ALARM, Category.TIMER})),
)


@dataclass(frozen=True)
class RuleFlags:
    enable_rule_mr: bool = True
    enable_screen_spatial_rules: bool = False


def ordinal_index(mention_text: str, list_length: int) -> int | None:
    """1-based list position named by the mention, using the longest matching pattern."""
    text = normalize(mention_text)
    best: tuple[int, int, int] | None = None  # (-length, pattern rank, index)
    for rank, (pattern, to_index) in enumerate(ORDINAL_PATTERNS):
        for m in pattern.finditer(text):
            cand = (-(m.end() - m.start()), rank, to_index(m, list_length))
            if best is None or cand < best:
                best = cand
    if best is None:
        return None
    index = best[2]
    return index if 1 <= index <= list_length else None


def active_list(entities: Sequence[Entity], turns: Sequence[ConversationTurn] = ()) -> list[Entity]:
    """Entities of the most recently presented list, ordered by position."""
    listed = {e.id: e for e in entities if e.location.list_index is not None}
    if not listed:
        return []
    for turn in reversed(turns):
        items = [listed[i] for i in turn.presented_entity_ids if i in listed]
        if items:
            return sorted(items, key=lambda e: e.location.list_index)
    # Without turn history the list is only usable when it is unambiguous.
    lengths = {e.location.list_length for e in listed.values()}
    indices = [e.location.list_index for e in listed.values()]
    if len(lengths) == 1 and len(set(indices)) == len(indices):
        return sorted(listed.values(), key=lambda e: e.location.list_index)
    return []


def _ordinal_rule(mention: Mention, entities: Sequence[Entity], turns) -> Entity | None:
    items = active_list(entities, turns)
    if not items:
        return None
    n = items[0].location.list_length
    index = ordinal_index(mention.text, n)
    if index is None:
        return None
    hits = [e for e in items if e.location.list_index == index]
    return hits[0] if len(hits) == 1 else None


def _screen_spatial_rule(mention: Mention, entities: Sequence[Entity]) -> Entity | None:
    words = normalize(mention.text).split()
    keys = [w for w in words if w in SCREEN_SPATIAL]
    on_screen = [e for e in entities if e.location.screen_box is not None]
    if len(keys) != 1 or not on_screen:
        return None
    axis, pick = SCREEN_SPATIAL[keys[0]]
    coord = (lambda e: e.location.screen_box.center_y) if axis == "y" else (lambda e: e.location.screen_box.center_x)
    target = pick(coord(e) for e in on_screen)
    hits = [e for e in on_screen if abs(coord(e) - target) < 1e-9]
    return hits[0] if len(hits) == 1 else None


def keyword_categories(request_tokens: Iterable[str]) -> frozenset[Category]:
    present = set(request_tokens)
    cats: set[Category] = set()
    for words, group in KEYWORD_CATEGORIES:
        if words <= present:
            cats |= group
    return frozenset(cats)


def _keyword_rule(request_tokens: Sequence[str], entities: Sequence[Entity]) -> Entity | None:
    cats = keyword_categories(request_tokens)
    if not cats:
        return None
    hits = [e for e in entities if e.category in cats]
    return hits[0] if len(hits) == 1 else None


def resolve_rules(
    mention: Mention,
    entities: Sequence[Entity],
    request_tokens: Sequence[str],
    turns: Sequence[ConversationTurn] = (),
    flags: RuleFlags = RuleFlags(),
) -> Resolution | None:
    """Apply passthrough, ordinal, optional screen-spatial, then keyword rules."""
    ids = {e.id for e in entities}
    if mention.rule_candidate_entity is not None and mention.rule_candidate_entity in ids:
        return Resolution(mention, ((mention.rule_candidate_entity, 1.0),), Provenance.RULE)
    if not flags.enable_rule_mr:
        return None
    hit = _ordinal_rule(mention, entities, turns)
    if hit is None and flags.enable_screen_spatial_rules:
        hit = _screen_spatial_rule(mention, entities)
    if hit is None:
        hit = _keyword_rule(request_tokens, entities)
    if hit is None:
        return None
    return Resolution(mention, ((hit.id, 1.0),), Provenance.RULE)
