"""Mention resolution: rules first, then a modular category/location/text scorer."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import torch
from torch import nn

from . import checkpoint
from .core import CATEGORIES, ConversationTurn, Entity, Mention, Provenance, Resolution
from .instrument import Counters
from .rules import RuleFlags, resolve_rules
from .text import UNK, Vocabulary, detokenize, tokens
from .training import PRF, TrainConfig, TrainReport, run_epochs

LOCATION_DIM = 26
MODULES = ("category", "location", "text")
_CAT_INDEX = {c: i for i, c in enumerate(CATEGORIES)}


def location_features(entity: Entity, peers: Sequence[Entity] = ()) -> list[float]:
    """Fixed-width location vector.

    Layout: screen box (x, y, w, h, cx, cy) | list (index/length, is_first,
    is_last, one-hot index clipped to 10) | source flags (screen, list,
    background) | extremal flags among on-screen ``peers`` (top, bottom,
    left, right). Without peers the extremal flags compare against the
    entity alone.
    """
    f = [0.0] * LOCATION_DIM
    loc = entity.location
    if loc.screen_box is not None:
        b = loc.screen_box
        f[0:6] = [b.x, b.y, b.w, b.h, b.center_x, b.center_y]
        f[19] = 1.0
    elif loc.list_index is not None:
        f[6] = loc.list_index / loc.list_length
        f[7] = float(loc.list_index == 1)
        f[8] = float(loc.list_index == loc.list_length)
        f[9 + min(loc.list_index, 10) - 1] = 1.0
        f[20] = 1.0
    if entity.source.value == "background":
        f[21] = 1.0
    if loc.screen_box is not None:
        boxes = [p.location.screen_box for p in peers if p.location.screen_box is not None] or [loc.screen_box]
        ys = [b.center_y for b in boxes]
        xs = [b.center_x for b in boxes]
        b = loc.screen_box
        f[22:26] = [float(b.center_y <= min(ys)), float(b.center_y >= max(ys)),
                    float(b.center_x <= min(xs)), float(b.center_x >= max(xs))]
    return f


@dataclass
class MrConfig:
    vocab_size: int
    dim: int = 64
    hidden: int = 64
    category_dim: int = 16
    max_text_tokens: int = 16
    threshold: float = 0.5


class Matcher(nn.Module):
    """Compatibility logit between a query vector and an entity feature vector.

    Hidden units see both an additive and a multiplicative (factored
    bilinear) interaction, so conjunctions like "the fourth" x index-4 are a
    single unit rather than something the tanh layer has to carve out.
    """

    def __init__(self, n_query: int, n_feature: int, hidden: int):
        super().__init__()
        self.query = nn.Linear(n_query, hidden)
        self.feature = nn.Linear(n_feature, hidden)
        self.out = nn.Linear(2 * hidden, 1)

    def forward(self, q: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        a, b = self.query(q), self.feature(x)
        return self.out(torch.cat([torch.tanh(a + b), torch.tanh(a) * torch.tanh(b)], -1)).squeeze(-1)


def _masked_mean(x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    mask = mask.unsqueeze(-1).to(x.dtype)
    return (x * mask).sum(-2) / mask.sum(-2).clamp(min=1.0)


@dataclass
class MrBatch:
    mention: torch.Tensor        # (B, Lm)
    request: torch.Tensor        # (B, Lr)
    category: torch.Tensor       # (B, C)
    location: torch.Tensor       # (B, C, LOCATION_DIM)
    text: torch.Tensor           # (B, C, Lt)
    candidates: torch.Tensor     # (B, C) bool
    # String identity of mention / entity-text tokens (0 = padding), so exact
    # overlap also works for tokens outside the vocabulary.
    mention_keys: torch.Tensor   # (B, Lm)
    text_keys: torch.Tensor      # (B, C, Lt)


class MrModel(nn.Module):
    """Three module scorers mixed by request-conditioned softmax weights."""

    kind = "mr"

    def __init__(self, config: MrConfig, vocab: Vocabulary):
        super().__init__()
        if config.vocab_size != len(vocab):
            raise ValueError("config.vocab_size does not match the vocabulary")
        self.config = config
        self.vocab = vocab
        d, h = config.dim, config.hidden
        self.embedding = nn.Embedding(config.vocab_size, d)
        self.mention_proj = nn.Linear(d, h)
        self.request_proj = nn.Linear(d, h)
        self.weight_head = nn.Linear(h, 3)
        self.category_embedding = nn.Embedding(len(CATEGORIES), config.category_dim)
        self.category_scorer = Matcher(2 * h, config.category_dim, h)
        self.location_scorer = Matcher(2 * h, LOCATION_DIM, h)
        self.text_scorer = Matcher(2 * h, 2 * d + 2, h)

    @property
    def threshold(self) -> float:
        return self.config.threshold

    def encode(self, batch: MrBatch) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Returns (query rep (B, 2h), request rep (B, h), raw mention mean (B, d))."""
        m_raw = _masked_mean(self.embedding(batch.mention), batch.mention != 0)
        r_raw = _masked_mean(self.embedding(batch.request), batch.request != 0)
        m = torch.relu(self.mention_proj(m_raw))
        r = torch.relu(self.request_proj(r_raw))
        return torch.cat([m, r], -1), r, m_raw

    def _alignment(self, batch: MrBatch, text_emb: torch.Tensor) -> torch.Tensor:
        """Per-candidate (exact overlap fraction, mean best cosine) of mention tokens against entity text."""
        mention, text = batch.mention, batch.text
        mk, tk = batch.mention_keys, batch.text_keys
        k_mask = mk > 0
        same = (mk[:, None, :, None] == tk[:, :, None, :]) & (tk > 0)[:, :, None, :]
        hits = same.any(-1).to(text_emb.dtype) * k_mask[:, None, :]
        exact = hits.sum(-1) / k_mask.sum(-1, keepdim=True).clamp(min=1).to(text_emb.dtype)
        m_mask = mention > UNK                                     # (B, Lm)
        t_mask = text > UNK                                        # (B, C, Lt)
        n_m = m_mask.sum(-1, keepdim=True).clamp(min=1).to(text_emb.dtype)
        m_emb = nn.functional.normalize(self.embedding(mention), dim=-1)
        t_emb = nn.functional.normalize(text_emb, dim=-1)
        cos = torch.einsum("bmd,bctd->bcmt", m_emb, t_emb)
        cos = cos.masked_fill(~t_mask[:, :, None, :], -1.0).amax(-1)
        soft = (cos * m_mask[:, None, :]).sum(-1) / n_m
        return torch.stack([exact, soft], -1)

    def module_weights(self, request_rep: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.weight_head(request_rep), -1)

    def forward(self, batch: MrBatch) -> dict[str, torch.Tensor]:
        q, r, m_raw = self.encode(batch)
        n_cand = batch.category.shape[1]
        qc = q.unsqueeze(1).expand(-1, n_cand, -1)
        cat = self.category_embedding(batch.category)
        text_emb = self.embedding(batch.text)
        text = _masked_mean(text_emb, batch.text != 0)
        overlap = m_raw.unsqueeze(1) * text
        align = self._alignment(batch, text_emb)
        s_cat = torch.sigmoid(self.category_scorer(qc, cat))
        s_loc = torch.sigmoid(self.location_scorer(qc, batch.location))
        s_txt = torch.sigmoid(self.text_scorer(qc, torch.cat([text, overlap, align], -1)))
        w = self.module_weights(r)
        modules = torch.stack([s_cat, s_loc, s_txt], -1)
        score = (modules * w.unsqueeze(1)).sum(-1)
        return {"score": score, "modules": modules, "weights": w}

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
    def load(cls, path: str | Path) -> MrModel:
        header, state = checkpoint.load(path)
        if header.get("kind") != cls.kind:
            raise checkpoint.CheckpointError(f"{path} holds a {header.get('kind')!r} model, not mr")
        model = cls(MrConfig(**header["config"]), Vocabulary.from_tokens(header["vocab"]))
        model.load_state_dict(state)
        model.eval()
        return model


def _pad(rows: Sequence[Sequence[int]], width: int | None = None) -> torch.Tensor:
    width = width or max((len(r) for r in rows), default=1) or 1
    out = torch.zeros(len(rows), width, dtype=torch.long)
    for i, r in enumerate(rows):
        r = list(r)[:width]
        out[i, : len(r)] = torch.tensor(r, dtype=torch.long)
    return out


def entity_text_tokens(entity: Entity) -> list[str]:
    return [t for text in entity.texts for t in tokens(text)]


def make_batch(
    model: MrModel,
    items: Sequence[tuple[Sequence[str], tuple[int, int], Sequence[Entity]]],
) -> MrBatch:
    """``items`` are (request tokens, mention span, candidates) triples."""
    vocab = model.vocab
    n_cand = max((len(c) for _, _, c in items), default=1) or 1
    lt = model.config.max_text_tokens
    mention_rows, request_rows = [], []
    cats = torch.zeros(len(items), n_cand, dtype=torch.long)
    locs = torch.zeros(len(items), n_cand, LOCATION_DIM, dtype=model.embedding.weight.dtype)
    texts = torch.zeros(len(items), n_cand, lt, dtype=torch.long)
    text_keys = torch.zeros(len(items), n_cand, lt, dtype=torch.long)
    mask = torch.zeros(len(items), n_cand, dtype=torch.bool)
    keys: dict[str, int] = {}

    def key(tok: str) -> int:
        return keys.setdefault(tok, len(keys) + 1)

    mention_key_rows = []
    for b, (req, (s, e), cands) in enumerate(items):
        mention_rows.append(vocab.encode(req[s:e]) or [0])
        mention_key_rows.append([key(t) for t in req[s:e]] or [0])
        request_rows.append(vocab.encode(req))
        for c, ent in enumerate(cands):
            cats[b, c] = _CAT_INDEX[ent.category]
            locs[b, c] = torch.tensor(location_features(ent, cands), dtype=locs.dtype)
            toks = entity_text_tokens(ent)[:lt]
            texts[b, c, : len(toks)] = torch.tensor(vocab.encode(toks), dtype=torch.long)
            text_keys[b, c, : len(toks)] = torch.tensor([key(t) for t in toks], dtype=torch.long)
            mask[b, c] = True
    return MrBatch(_pad(mention_rows), _pad(request_rows), cats, locs, texts, mask,
                   _pad(mention_key_rows), text_keys)


def score_entities(model: MrModel, request_tokens: Sequence[str], span: tuple[int, int], entities: Sequence[Entity]) -> dict[str, torch.Tensor]:
    """Per-entity aggregated and module scores for one mention (no grad)."""
    with torch.no_grad():
        out = model(make_batch(model, [(list(request_tokens), span, list(entities))]))
    return {k: v[0] for k, v in out.items()}


def score_category(model: MrModel, request_tokens, span, entity: Entity) -> float:
    return score_entities(model, request_tokens, span, [entity])["modules"][0, 0].item()


def score_location(model: MrModel, request_tokens, span, entity: Entity) -> float:
    return score_entities(model, request_tokens, span, [entity])["modules"][0, 1].item()


def score_text(model: MrModel, request_tokens, span, entity: Entity) -> float:
    return score_entities(model, request_tokens, span, [entity])["modules"][0, 2].item()


def aggregate(model: MrModel, request_tokens: Sequence[str], s_cat, s_loc, s_txt):
    """Convex mix of module scores with weights from the request tokens."""
    with torch.no_grad():
        req = _pad([model.vocab.encode(request_tokens)])
        r = torch.relu(model.request_proj(_masked_mean(model.embedding(req), req != 0)))
        w = model.module_weights(r)[0]
    return (w[0] * s_cat + w[1] * s_loc + w[2] * s_txt).item()


def resolve_model(model: MrModel, mention: Mention, entities: Sequence[Entity], request_tokens: Sequence[str]) -> Resolution:
    if not entities:
        return Resolution(mention, (), Provenance.MODEL)
    scores = score_entities(model, request_tokens, mention.span, entities)["score"].tolist()
    ranked = sorted(
        ((e.id, s, i) for i, (e, s) in enumerate(zip(entities, scores)) if s >= model.threshold),
        key=lambda t: (-t[1], t[2]),
    )
    return Resolution(mention, tuple((i, s) for i, s, _ in ranked), Provenance.MODEL)


def resolve(
    mention: Mention,
    entities: Sequence[Entity],
    request_tokens: Sequence[str],
    model: MrModel | None,
    *,
    turns: Sequence[ConversationTurn] = (),
    flags: RuleFlags = RuleFlags(),
    counters: Counters | None = None,
) -> Resolution:
    """Rules short-circuit the model; ``counters['mr_model']`` counts model runs."""
    entities = list(entities)
    if not entities:
        return Resolution(mention, (), Provenance.RULE)
    hit = resolve_rules(mention, entities, request_tokens, turns, flags)
    if hit is not None:
        return hit
    if model is None:
        return Resolution(mention, (), Provenance.RULE)
    if counters is not None:
        counters.incr("mr_model")
    return resolve_model(model, mention, entities, request_tokens)


# -- training -----------------------------------------------------------------

DEFAULT_TRAIN = TrainConfig(epochs=20)


@dataclass
class MrExample:
    request: list[str]
    mention: tuple[int, int]
    candidates: list[Entity]
    gold_ids: frozenset[str]

    def __post_init__(self) -> None:
        if not self.candidates:
            raise ValueError("every resolver example needs at least one candidate")
        self.gold_ids = frozenset(self.gold_ids)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> MrExample:
        m = d["mention"]
        return cls(
            tokens(d["request"]),
            (int(m["start"]), int(m["end"])),
            [Entity.from_dict(e) for e in d["candidates"]],
            frozenset(d["gold_ids"]),
        )


# Entity texts bring a long tail of names, numbers and addresses; exact overlap
# handles those by string identity, so the embedding table keeps only the head.
MAX_VOCAB = 2400


def build_vocab(examples: Iterable[MrExample], min_freq: int = 2, max_size: int | None = MAX_VOCAB) -> Vocabulary:
    def seqs():
        for ex in examples:
            yield ex.request
            for e in ex.candidates:
                yield entity_text_tokens(e)

    return Vocabulary.build(seqs(), min_freq, max_size)


def new_model(examples: Sequence[MrExample], min_freq: int = 2, **config: Any) -> MrModel:
    vocab = build_vocab(examples, min_freq)
    return MrModel(MrConfig(vocab_size=len(vocab), **config), vocab)


def pair_loss(model: MrModel, batch: Sequence[MrExample]) -> torch.Tensor:
    """Binary cross-entropy of the aggregated score for every (mention, candidate) pair."""
    mb = make_batch(model, [(ex.request, ex.mention, ex.candidates) for ex in batch])
    score = model(mb)["score"]
    labels = torch.zeros_like(score)
    for b, ex in enumerate(batch):
        for c, ent in enumerate(ex.candidates):
            labels[b, c] = float(ent.id in ex.gold_ids)
    eps = 1e-7
    score = score.clamp(eps, 1 - eps)
    bce = -(labels * torch.log(score) + (1 - labels) * torch.log1p(-score))
    return bce[mb.candidates].mean()


def resolution_prf(model: MrModel, examples: Iterable[MrExample]) -> dict[str, float]:
    tp = n_pred = n_gold = exact = total = 0
    for ex in examples:
        mention = Mention(ex.mention[0], ex.mention[1], detokenize(ex.request[ex.mention[0]:ex.mention[1]]))
        pred = set(resolve_model(model, mention, ex.candidates, ex.request).entity_ids)
        tp += len(pred & ex.gold_ids)
        n_pred += len(pred)
        n_gold += len(ex.gold_ids)
        exact += pred == set(ex.gold_ids)
        total += 1
    prf = PRF.from_counts(tp, n_pred, n_gold)
    return {**asdict(prf), "exact_match": exact / total if total else 1.0}


def train_mr(
    model: MrModel,
    train: Sequence[MrExample],
    val: Sequence[MrExample] = (),
    cfg: TrainConfig | None = None,
    **resume: Any,
) -> tuple[MrModel, TrainReport]:
    cfg = cfg or DEFAULT_TRAIN

    def validate(m: MrModel) -> dict[str, float]:
        return resolution_prf(m, val) if val else {}

    _, report = run_epochs(model, train, pair_loss, cfg, validate=validate, name="mr", **resume)
    return model, report
