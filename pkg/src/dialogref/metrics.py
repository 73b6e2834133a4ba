"""Rewrite and resolution metrics.

Rewrites are scored on *carried* tokens only: the multiset of target tokens
minus the multiset of context-dependent query tokens. Resolution is scored
on entity ids pooled over all references of a request.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

from .text import tokens
from .training import PRF


def _ratio(num: int, den: int) -> float:
    return num / den if den else 1.0


def _f1(hit: int, n_pred: int, n_gold: int) -> float:
    """Harmonic mean of P and R, evaluated on counts so it is exactly rounded."""
    if not n_pred and not n_gold:
        return 1.0
    if not n_pred or not n_gold:
        return 0.0
    return 2 * hit / (n_pred + n_gold)


def carried_counts(prediction: str, target: str, source: str) -> tuple[int, int, int]:
    """(|C ∩ Ĉ|, |Ĉ|, |C|) with multiset semantics."""
    src = Counter(tokens(source))
    gold = Counter(tokens(target)) - src
    pred = Counter(tokens(prediction)) - src
    return sum((gold & pred).values()), sum(pred.values()), sum(gold.values())


def token_f1_restricted(prediction: str, target: str, source: str) -> tuple[float, float, float]:
    hit, n_pred, n_gold = carried_counts(prediction, target, source)
    return _ratio(hit, n_pred), _ratio(hit, n_gold), _f1(hit, n_pred, n_gold)


def exact_match_rewrite(prediction: str, target: str) -> int:
    return int(tokens(prediction) == tokens(target))


@dataclass
class RewriteMetrics:
    precision: float
    recall: float
    f1: float
    exact_match: float
    count: int
    per_class: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _pool_rewrites(rows: Sequence[tuple[str, str, str]]) -> dict[str, float]:
    hit = n_pred = n_gold = em = 0
    for pred, target, source in rows:
        h, p, g = carried_counts(pred, target, source)
        hit, n_pred, n_gold = hit + h, n_pred + p, n_gold + g
        em += exact_match_rewrite(pred, target)
    return {"precision": _ratio(hit, n_pred), "recall": _ratio(hit, n_gold), "f1": _f1(hit, n_pred, n_gold),
            "exact_match": em / len(rows) if rows else 1.0, "count": len(rows)}


def rewrite_scores(rows: Iterable[tuple[str, str, str, str]]) -> RewriteMetrics:
    """``rows`` are (prediction, target, source, gold class); counts are pooled (micro)."""
    rows = list(rows)
    by_class: dict[str, list[tuple[str, str, str]]] = {}
    for pred, target, source, cls in rows:
        by_class.setdefault(cls, []).append((pred, target, source))
    overall = _pool_rewrites([r[:3] for r in rows])
    return RewriteMetrics(
        overall["precision"], overall["recall"], overall["f1"], overall["exact_match"],
        overall["count"], {k: _pool_rewrites(v) for k, v in sorted(by_class.items())},
    )


@dataclass
class ResolutionMetrics:
    precision: float
    recall: float
    f1: float
    exact_match: float
    macro_f1: float
    count: int

    def to_dict(self) -> dict:
        return asdict(self)


def resolution_scores(
    predicted: Sequence[Mapping[object, Iterable[str]] | Iterable[str]],
    gold: Sequence[Mapping[object, Iterable[str]] | Iterable[str]],
) -> ResolutionMetrics:
    """Each element is one request: a mention->ids mapping or a flat id collection.

    Ids are pooled over all references of a request before comparison.
    """
    if len(predicted) != len(gold):
        raise ValueError("predicted and gold must cover the same requests")
    tp = n_pred = n_gold = exact = 0
    macro = 0.0
    for p, g in zip(predicted, gold):
        ps, gs = pooled_ids(p), pooled_ids(g)
        hit = len(ps & gs)
        tp, n_pred, n_gold = tp + hit, n_pred + len(ps), n_gold + len(gs)
        exact += ps == gs
        macro += PRF.from_counts(hit, len(ps), len(gs)).f1
    prf = PRF.from_counts(tp, n_pred, n_gold)
    n = len(gold)
    return ResolutionMetrics(prf.precision, prf.recall, prf.f1,
                             exact / n if n else 1.0, macro / n if n else 1.0, n)


def pooled_ids(x) -> set[str]:
    """All entity ids of one request, whether given per mention or flat."""
    if isinstance(x, Mapping):
        return {i for ids in x.values() for i in ids}
    return set(x)


def span_scores(predicted: Sequence[Iterable[tuple[int, int]]], gold: Sequence[Iterable[tuple[int, int]]]) -> ResolutionMetrics:
    """Exact-span detection scores, same pooling as :func:`resolution_scores`."""
    return resolution_scores([{0: [f"{s}:{e}" for s, e in p]} for p in predicted],
                             [{0: [f"{s}:{e}" for s, e in g]} for g in gold])
