"""Mention detection: an independent span classifier plus entity-text matching rules."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import torch
from torch import nn

from . import checkpoint
from .core import Entity, Mention, Provenance
from .text import Vocabulary, detokenize, normalize, tokenize, tokens
from .training import PRF, TrainConfig, TrainReport, run_epochs

MAX_SPAN = 5


@dataclass
class MdConfig:
    vocab_size: int
    dim: int = 64
    hidden: int = 64
    max_positions: int = 64
    max_span: int = MAX_SPAN
    width_dim: int = 16
    threshold: float = 0.5


class MdModel(nn.Module):
    """Boundary-embedding span scorer.

    Each token is its word embedding plus a learned position embedding. A
    span's logit is an MLP over its first and last token, the tokens just
    outside it (a learned edge vector past either end of the utterance) and
    a span-width embedding. Spans never see one another.
    """

    kind = "md"

    def __init__(self, config: MdConfig, vocab: Vocabulary):
        super().__init__()
        if config.vocab_size != len(vocab):
            raise ValueError("config.vocab_size does not match the vocabulary")
        self.config = config
        self.vocab = vocab
        self.embedding = nn.Embedding(config.vocab_size, config.dim)
        self.position = nn.Embedding(config.max_positions, config.dim)
        self.edge = nn.Parameter(torch.zeros(2, config.dim))
        self.width = nn.Embedding(config.max_span, config.width_dim)
        self.hidden = nn.Linear(4 * config.dim + config.width_dim, config.hidden)
        self.out = nn.Linear(config.hidden, 1)

    @property
    def threshold(self) -> float:
        return self.config.threshold

    def token_reps(self, ids: torch.Tensor) -> torch.Tensor:
        """``ids`` is (B, n); returns (B, n, dim)."""
        pos = torch.arange(ids.shape[-1]).clamp(max=self.config.max_positions - 1)
        return self.embedding(ids) + self.position(pos)

    def span_logits(self, reps: torch.Tensor, starts: torch.Tensor, ends: torch.Tensor) -> torch.Tensor:
        """``reps`` is (n, dim) for one utterance; ends are exclusive."""
        padded = torch.cat([self.edge[:1].to(reps.dtype), reps, self.edge[1:].to(reps.dtype)])
        width = (ends - starts - 1).clamp(max=self.config.max_span - 1)
        feats = torch.cat([reps[starts], reps[ends - 1], padded[starts], padded[ends + 1], self.width(width)], dim=-1)
        return self.out(torch.relu(self.hidden(feats))).squeeze(-1)

    def save(self, path: str | Path, meta: Mapping[str, Any] | None = None) -> None:
        header = {
            "kind": self.kind,
            "config": asdict(self.config),
            "vocab": self.vocab.itos,
            "vocab_hash": self.vocab.hash,
            "meta": dict(meta or {}),
        }
        checkpoint.save(path, header, self.state_dict())

    @classmethod
    def load(cls, path: str | Path) -> MdModel:
        header, state = checkpoint.load(path)
        if header.get("kind") != cls.kind:
            raise checkpoint.CheckpointError(f"{path} holds a {header.get('kind')!r} model, not md")
        model = cls(MdConfig(**header["config"]), Vocabulary.from_tokens(header["vocab"]))
        model.load_state_dict(state)
        model.eval()
        return model


def enumerate_spans(n: int, max_len: int = MAX_SPAN) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, min(n, i + max_len) + 1)]


def score_spans(model: MdModel, token_embeddings: torch.Tensor, spans: Sequence[tuple[int, int]]) -> list[float]:
    if not spans:
        return []
    starts = torch.tensor([s for s, _ in spans])
    ends = torch.tensor([e for _, e in spans])
    with torch.no_grad():
        return torch.sigmoid(model.span_logits(token_embeddings, starts, ends)).tolist()


def detect_model(model: MdModel, toks: Sequence[str]) -> list[Mention]:
    if not toks:
        return []
    spans = enumerate_spans(len(toks), model.config.max_span)
    with torch.no_grad():
        reps = model.token_reps(torch.tensor([model.vocab.encode(toks)]))[0]
    scores = score_spans(model, reps, spans)
    return [
        Mention(s, e, detokenize(toks[s:e]), Provenance.MODEL, score)
        for (s, e), score in zip(spans, scores)
        if score >= model.threshold
    ]


def _entity_patterns(entities: Iterable[Entity]) -> dict[tuple[str, ...], list[str]]:
    patterns: dict[tuple[str, ...], list[str]] = {}
    for e in entities:
        for text in e.texts:
            key = tuple(tokens(text))
            if key and e.id not in patterns.setdefault(key, []):
                patterns[key].append(e.id)
    return patterns


def detect_rules(toks: Sequence[str], entities: Iterable[Entity]) -> list[Mention]:
    """Whole-token matches of normalized entity texts, longest match first at each position.

    A span shared by several entities is still reported, but without a
    candidate link, since naming one would be a guess.
    """
    toks = [normalize(t) for t in toks]
    patterns = _entity_patterns(entities)
    if not patterns:
        return []
    longest = max(len(k) for k in patterns)
    out: list[Mention] = []
    i = 0
    while i < len(toks):
        hit = None
        for length in range(min(longest, len(toks) - i), 0, -1):
            ids = patterns.get(tuple(toks[i : i + length]))
            if ids:
                hit = (length, ids)
                break
        if hit is None:
            i += 1
            continue
        length, ids = hit
        out.append(Mention(
            i, i + length, detokenize(toks[i : i + length]), Provenance.RULE, 1.0,
            ids[0] if len(ids) == 1 else None,
        ))
        i += length
    return out


def merge_mentions(model_mentions: Iterable[Mention], rule_mentions: Iterable[Mention]) -> list[Mention]:
    merged: dict[tuple[int, int], Mention] = {m.span: m for m in model_mentions}
    for m in rule_mentions:
        merged[m.span] = m
    return sorted(merged.values(), key=lambda m: m.span)


def detect(model: MdModel | None, toks: Sequence[str], entities: Iterable[Entity], *, use_rules: bool = True) -> list[Mention]:
    model_mentions = detect_model(model, toks) if model is not None else []
    rule_mentions = detect_rules(toks, entities) if use_rules else []
    return merge_mentions(model_mentions, rule_mentions)


# -- training -----------------------------------------------------------------

DEFAULT_TRAIN = TrainConfig(epochs=10)


@dataclass
class MdExample:
    tokens: list[str]
    spans: list[tuple[int, int]]
    entities: list[Entity] = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> MdExample:
        return cls(
            tokens(d["utterance"]),
            [(int(s["start"]), int(s["end"])) for s in d.get("spans", ())],
            [Entity.from_dict(e) for e in d.get("entities", ())],
        )


def build_vocab(examples: Iterable[MdExample], min_freq: int = 2) -> Vocabulary:
    return Vocabulary.build((ex.tokens for ex in examples), min_freq)


def new_model(examples: Sequence[MdExample], min_freq: int = 2, **config: Any) -> MdModel:
    vocab = build_vocab(examples, min_freq)
    return MdModel(MdConfig(vocab_size=len(vocab), **config), vocab)


def span_loss(model: MdModel, batch: Sequence[MdExample]) -> torch.Tensor:
    """Mean binary cross-entropy over every enumerated span of every utterance."""
    logits, labels = [], []
    for ex in batch:
        if not ex.tokens:
            continue
        reps = model.token_reps(torch.tensor([model.vocab.encode(ex.tokens)]))[0]
        spans = enumerate_spans(len(ex.tokens), model.config.max_span)
        gold = set(ex.spans)
        starts = torch.tensor([s for s, _ in spans])
        ends = torch.tensor([e for _, e in spans])
        logits.append(model.span_logits(reps, starts, ends))
        labels.append(torch.tensor([float(sp in gold) for sp in spans], dtype=reps.dtype))
    return nn.functional.binary_cross_entropy_with_logits(torch.cat(logits), torch.cat(labels))


def span_prf(model: MdModel | None, examples: Iterable[MdExample], *, use_rules: bool = False) -> PRF:
    tp = n_pred = n_gold = 0
    for ex in examples:
        pred = {m.span for m in detect(model, ex.tokens, ex.entities, use_rules=use_rules)}
        gold = set(ex.spans)
        tp += len(pred & gold)
        n_pred += len(pred)
        n_gold += len(gold)
    return PRF.from_counts(tp, n_pred, n_gold)


def train_md(
    model: MdModel,
    train: Sequence[MdExample],
    val: Sequence[MdExample] = (),
    cfg: TrainConfig | None = None,
    **resume: Any,
) -> tuple[MdModel, TrainReport]:
    """``resume`` may carry ``optimizer=`` and ``report=`` to continue a run."""
    cfg = cfg or DEFAULT_TRAIN

    def validate(m: MdModel) -> dict[str, float]:
        return asdict(span_prf(m, val)) if val else {}

    _, report = run_epochs(model, train, span_loss, cfg, validate=validate, name="md", **resume)
    return model, report
