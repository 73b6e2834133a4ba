"""Brute-force checker for generated resolution samples.

Each gold mention carries a declarative referent predicate (``ref``). The
checker evaluates that predicate against every candidate and demands that the
satisfying set equals the gold set exactly. It shares no code with the
generators beyond text normalization.
"""

from __future__ import annotations

from typing import Any, Sequence

from ..core import ConversationTurn, Entity
from ..text import tokens
from .samples import ResolutionSample


def _contains(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    n = len(needle)
    return n > 0 and any(list(haystack[i : i + n]) == list(needle) for i in range(len(haystack) - n + 1))


def _latest_list(entities: Sequence[Entity], turns: Sequence[ConversationTurn]) -> list[Entity]:
    by_id = {e.id: e for e in entities}
    for turn in reversed(list(turns)):
        items = [by_id[i] for i in turn.presented_entity_ids
                 if i in by_id and by_id[i].location.list_index is not None]
        if items:
            return items
    return []


def satisfying(ref: dict[str, Any], entities: Sequence[Entity], turns: Sequence[ConversationTurn]) -> set[str]:
    kind = ref["kind"]
    if kind == "category":
        cats = set(ref["categories"])
        src = ref.get("source")
        return {e.id for e in entities if e.category.value in cats and (src is None or e.source.value == src)}
    if kind == "ordinal":
        items = _latest_list(entities, turns)
        if not items:
            return set()
        n = items[0].location.list_length
        pos = ref["position"] if "position" in ref else n + 1 - ref["from_end"]
        return {e.id for e in items if e.location.list_index == pos}
    if kind == "extremal":
        boxed = [e for e in entities if e.location.screen_box is not None]
        if not boxed:
            return set()
        key = (lambda e: e.location.screen_box.center_y) if ref["axis"] == "y" else (lambda e: e.location.screen_box.center_x)
        target = (max if ref["pick"] == "max" else min)(key(e) for e in boxed)
        return {e.id for e in boxed if abs(key(e) - target) < 1e-9}
    if kind == "text":
        phrase = tokens(ref["phrase"])
        return {e.id for e in entities if any(_contains(tokens(t), phrase) for t in e.texts)}
    if kind == "name":
        name = tokens(ref["text"])
        return {e.id for e in entities if any(tokens(t) == name for t in e.texts)}
    if kind == "and":
        sets = [satisfying(r, entities, turns) for r in ref["all"]]
        return set.intersection(*sets) if sets else set()
    raise ValueError(f"unknown referent predicate {kind!r}")


def check(sample: ResolutionSample, max_span: int = 5) -> list[str]:
    """Problems with ``sample``; empty when it is sound."""
    problems = []
    toks = sample.tokens
    for m in sample.mentions:
        if not 0 <= m.start < m.end <= len(toks):
            problems.append(f"span [{m.start},{m.end}) outside {len(toks)} tokens")
            continue
        if m.end - m.start > max_span:
            problems.append(f"span [{m.start},{m.end}) longer than {max_span} tokens")
        got = satisfying(m.ref, sample.entities, sample.turns)
        if got != set(m.gold_ids):
            problems.append(f"mention {toks[m.start:m.end]} satisfied by {sorted(got)}, gold {m.gold_ids}")
    ids = [e.id for e in sample.entities]
    if len(set(ids)) != len(ids):
        problems.append("duplicate entity ids")
    # Entity names may only appear where a mention names them on purpose.
    for e in sample.entities:
        for t in e.texts:
            pat = tokens(t)
            for i in range(len(toks) - len(pat) + 1):
                if toks[i : i + len(pat)] == pat:
                    named = any(
                        m.ref.get("kind") == "name" and m.start == i and m.end == i + len(pat)
                        for m in sample.mentions
                    )
                    if not named:
                        problems.append(f"entity text {t!r} leaks into the utterance")
    return problems
