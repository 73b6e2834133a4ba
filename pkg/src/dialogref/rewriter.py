"""Context-free query rewriting with a gated LSTM encoder-decoder and copy mechanism.

A use-case classifier sits on the pooled encoder state. ``None`` predictions
return the input verbatim and never touch the decoder; the other classes are
decoded greedily, each step mixing the vocabulary softmax with attention mass
copied from source positions.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import torch
from torch import nn

from . import checkpoint
from .core import ConversationTurn, RewriteClass, Speaker
from .instrument import Counters
from .text import AGT, BOS, EOS, PAD, SEP, UNK, USR, Vocabulary, surface, tokens
from .training import TrainConfig, TrainReport, run_epochs

log = logging.getLogger(__name__)

CLASSES = (RewriteClass.AER, RewriteClass.CBR, RewriteClass.NONE)
_CLASS_INDEX = {c: i for i, c in enumerate(CLASSES)}
MAX_DECODE = 32
TRUNCATION_MARKER = "[truncated]"


@dataclass
class QrConfig:
    vocab_size: int
    dim: int = 64
    hidden: int = 64
    max_decode: int = MAX_DECODE
    max_source: int = 160
    decoder_weight: float = 1.0


@dataclass
class DialogEncoding:
    """Serialized dialog: ``<usr> t1 <sep> <agt> t2 <sep> ... <usr> query``."""

    tokens: list[str]
    ids: list[int]
    ext_ids: list[int]
    oov: list[str]
    query: str

    def ext_token(self, ext_id: int, vocab: Vocabulary) -> str:
        if ext_id < len(vocab):
            return vocab.itos[ext_id]
        return self.oov[ext_id - len(vocab)]


_MARKER = {Speaker.USER: "<usr>", Speaker.AGENT: "<agt>"}
_MARKER_IDS = {"<usr>": USR, "<agt>": AGT, "<sep>": SEP}


def serialize_dialog(turns: Sequence[ConversationTurn], query: str, window: int = 6) -> list[str]:
    out: list[str] = []
    for t in list(turns)[-window:]:
        out += [_MARKER[t.speaker], *tokens(t.utterance), "<sep>"]
    out += ["<usr>", *tokens(query)]
    return out


def encode_dialog(vocab: Vocabulary, turns: Sequence[ConversationTurn], query: str,
                  window: int = 6, max_source: int | None = None) -> DialogEncoding:
    toks = serialize_dialog(turns, query, window)
    if max_source is not None and len(toks) > max_source:
        toks = toks[-max_source:]
    ids, ext, oov = [], [], []
    for t in toks:
        if t in _MARKER_IDS:
            i = _MARKER_IDS[t]
            ids.append(i)
            ext.append(i)
            continue
        i = vocab.id(t)
        ids.append(i)
        if i == UNK:
            if t not in oov:
                oov.append(t)
            ext.append(len(vocab) + oov.index(t))
        else:
            ext.append(i)
    return DialogEncoding(toks, ids, ext, oov, query)


class QrModel(nn.Module):
    kind = "qr"

    def __init__(self, config: QrConfig, vocab: Vocabulary):
        super().__init__()
        if config.vocab_size != len(vocab):
            raise ValueError("config.vocab_size does not match the vocabulary")
        self.config = config
        self.vocab = vocab
        d, h = config.dim, config.hidden
        self.embedding = nn.Embedding(config.vocab_size, d, padding_idx=PAD)
        self.encoder = nn.LSTM(d, h, batch_first=True, bidirectional=True)
        self.classifier = nn.Linear(2 * h, len(CLASSES))
        self.bridge = nn.Linear(2 * h, 2 * h)
        self.decoder = nn.LSTMCell(d + 2 * h, h)
        self.attn = nn.Linear(2 * h, h, bias=False)
        self.combine = nn.Linear(3 * h, h)
        self.generator = nn.Linear(h, config.vocab_size)
        self.copy_gate = nn.Linear(3 * h + d, 1)
        # counts decoder steps actually run; pass-through keeps it unchanged
        self.counters = Counters()

    # -- encoder / classifier ---------------------------------------------------

    def encode(self, src: torch.Tensor, mask: torch.Tensor):
        lengths = mask.sum(1).clamp(min=1).cpu()
        packed = nn.utils.rnn.pack_padded_sequence(
            self.embedding(src), lengths, batch_first=True, enforce_sorted=False
        )
        out, _ = self.encoder(packed)
        out, _ = nn.utils.rnn.pad_packed_sequence(out, batch_first=True, total_length=src.shape[1])
        m = mask.unsqueeze(-1).to(out.dtype)
        pooled = (out * m).sum(1) / m.sum(1).clamp(min=1.0)
        return out, pooled

    def class_logits(self, pooled: torch.Tensor) -> torch.Tensor:
        return self.classifier(pooled)

    # -- decoder ---------------------------------------------------------------

    def init_state(self, pooled: torch.Tensor):
        h0, c0 = torch.tanh(self.bridge(pooled)).chunk(2, -1)
        ctx = torch.zeros(pooled.shape[0], 2 * self.config.hidden, dtype=pooled.dtype)
        return h0, c0, ctx

    def step(self, prev: torch.Tensor, state, enc: torch.Tensor, keys: torch.Tensor,
             mask: torch.Tensor, src_ext: torch.Tensor, n_ext: int):
        """One decoding step; returns (distribution over V + n_ext, new state)."""
        h, c, ctx = state
        x = self.embedding(prev)
        h, c = self.decoder(torch.cat([x, ctx], -1), (h, c))
        scores = torch.bmm(keys, h.unsqueeze(-1)).squeeze(-1)
        scores = scores.masked_fill(~mask, float("-inf"))
        attn = torch.softmax(scores, -1)
        ctx = torch.bmm(attn.unsqueeze(1), enc).squeeze(1)
        hc = torch.cat([h, ctx], -1)
        p_vocab = torch.softmax(self.generator(torch.tanh(self.combine(hc))), -1)
        p_gen = torch.sigmoid(self.copy_gate(torch.cat([hc, x], -1)))
        dist = torch.zeros(h.shape[0], self.config.vocab_size + n_ext, dtype=h.dtype)
        dist[:, : self.config.vocab_size] = p_gen * p_vocab
        dist = dist.scatter_add(1, src_ext, (1 - p_gen) * attn)
        return dist, (h, c, ctx)

    # -- persistence -------------------------------------------------------------

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
    def load(cls, path: str | Path) -> QrModel:
        header, state = checkpoint.load(path)
        if header.get("kind") != cls.kind:
            raise checkpoint.CheckpointError(f"{path} holds a {header.get('kind')!r} model, not qr")
        model = cls(QrConfig(**header["config"]), Vocabulary.from_tokens(header["vocab"]))
        model.load_state_dict(state)
        model.eval()
        return model


def _source_tensors(encodings: Sequence[DialogEncoding]):
    width = max(len(e.ids) for e in encodings)
    src = torch.zeros(len(encodings), width, dtype=torch.long)
    ext = torch.zeros(len(encodings), width, dtype=torch.long)
    for i, e in enumerate(encodings):
        src[i, : len(e.ids)] = torch.tensor(e.ids)
        ext[i, : len(e.ext_ids)] = torch.tensor(e.ext_ids)
    return src, ext, src != PAD


@dataclass
class RewriteResult:
    text: str
    rewrite_class: RewriteClass
    probabilities: dict[str, float]
    decoder_steps: int = 0
    truncated: bool = False
    tokens: list[str] = field(default_factory=list)


def classify(model: QrModel, enc: DialogEncoding) -> tuple[RewriteClass, dict[str, float]]:
    src, _, mask = _source_tensors([enc])
    with torch.no_grad():
        _, pooled = model.encode(src, mask)
        probs = torch.softmax(model.class_logits(pooled), -1)[0].tolist()
    best = max(range(len(CLASSES)), key=lambda i: probs[i])
    return CLASSES[best], {c.value: p for c, p in zip(CLASSES, probs)}


def greedy_decode(model: QrModel, enc: DialogEncoding, max_len: int | None = None,
                  return_dists: bool = False):
    """Greedy decode; returns (tokens, truncated, steps[, per-step distributions])."""
    max_len = max_len or model.config.max_decode
    src, ext, mask = _source_tensors([enc])
    n_ext = len(enc.oov)
    out: list[str] = []
    dists = []
    truncated = True
    steps = 0
    with torch.no_grad():
        enc_out, pooled = model.encode(src, mask)
        keys = model.attn(enc_out)
        state = model.init_state(pooled)
        prev = torch.tensor([BOS])
        for _ in range(max_len):
            dist, state = model.step(prev, state, enc_out, keys, mask, ext, n_ext)
            steps += 1
            if return_dists:
                dists.append(dist[0].clone())
            nxt = int(dist[0].argmax())
            if nxt == EOS:
                truncated = False
                break
            out.append(enc.ext_token(nxt, model.vocab))
            prev = torch.tensor([nxt if nxt < model.config.vocab_size else UNK])
    model.counters.incr("decoder_steps", steps)
    if return_dists:
        return out, truncated, steps, dists
    return out, truncated, steps


def rewrite(model: QrModel, enc: DialogEncoding) -> RewriteResult:
    cls, probs = classify(model, enc)
    if cls is RewriteClass.NONE:
        return RewriteResult(enc.query, cls, probs)
    toks, truncated, steps = greedy_decode(model, enc)
    if truncated:
        log.warning("rewrite hit the %d-token limit", model.config.max_decode)
        toks = toks + [TRUNCATION_MARKER]
    return RewriteResult(surface(toks), cls, probs, steps, truncated, toks)


def rewrite_dialog(model: QrModel, turns: Sequence[ConversationTurn], query: str, window: int = 6) -> RewriteResult:
    return rewrite(model, encode_dialog(model.vocab, turns, query, window, model.config.max_source))


# -- training -----------------------------------------------------------------

DEFAULT_TRAIN = TrainConfig(epochs=3, batch_size=64, lr=2e-3)


@dataclass
class QrExample:
    turns: list[ConversationTurn]
    query: str
    rewrite: str
    rewrite_class: RewriteClass

    def __post_init__(self) -> None:
        self.rewrite_class = RewriteClass(self.rewrite_class)
        if self.rewrite_class is RewriteClass.NONE and tokens(self.rewrite) != tokens(self.query):
            raise ValueError("None-class examples must have rewrite == query")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> QrExample:
        turns = [
            ConversationTurn(Speaker(t["speaker"]), t["utterance"], (), i + 1)
            for i, t in enumerate(d.get("turns", ()))
        ]
        return cls(turns, d["query"], d["rewrite"], RewriteClass(d["class"]))

    def to_dict(self) -> dict[str, Any]:
        return {
            "turns": [{"speaker": t.speaker.value, "utterance": t.utterance} for t in self.turns],
            "query": self.query,
            "rewrite": self.rewrite,
            "class": self.rewrite_class.value,
        }


def build_vocab(examples: Iterable[QrExample], min_freq: int = 2) -> Vocabulary:
    def seqs():
        for ex in examples:
            for t in ex.turns:
                yield tokens(t.utterance)
            yield tokens(ex.query)
            yield tokens(ex.rewrite)

    return Vocabulary.build(seqs(), min_freq)


def new_model(examples: Sequence[QrExample], min_freq: int = 2, **config: Any) -> QrModel:
    vocab = build_vocab(examples, min_freq)
    return QrModel(QrConfig(vocab_size=len(vocab), **config), vocab)


def _target_ids(model: QrModel, enc: DialogEncoding, rewrite_text: str) -> list[int]:
    out = []
    for t in tokens(rewrite_text):
        i = model.vocab.id(t)
        if i == UNK and t in enc.oov:
            i = len(model.vocab) + enc.oov.index(t)
        out.append(i)
    return out + [EOS]


def joint_loss(model: QrModel, batch: Sequence[QrExample]) -> torch.Tensor:
    """Classifier cross-entropy plus weighted teacher-forced copy-decoder NLL (AER/CbR only)."""
    encs = [encode_dialog(model.vocab, ex.turns, ex.query, max_source=model.config.max_source) for ex in batch]
    src, ext, mask = _source_tensors(encs)
    enc_out, pooled = model.encode(src, mask)
    labels = torch.tensor([_CLASS_INDEX[ex.rewrite_class] for ex in batch])
    loss = nn.functional.cross_entropy(model.class_logits(pooled), labels)

    rows = [i for i, ex in enumerate(batch) if ex.rewrite_class is not RewriteClass.NONE]
    if not rows:
        return loss
    idx = torch.tensor(rows)
    targets = [_target_ids(model, encs[i], batch[i].rewrite) for i in rows]
    width = max(len(t) for t in targets)
    tgt = torch.full((len(rows), width), PAD, dtype=torch.long)
    for r, t in enumerate(targets):
        tgt[r, : len(t)] = torch.tensor(t)
    n_ext = max(len(encs[i].oov) for i in rows)
    enc_sel, mask_sel, ext_sel = enc_out[idx], mask[idx], ext[idx]
    keys = model.attn(enc_sel)
    state = model.init_state(pooled[idx])
    prev = torch.full((len(rows),), BOS, dtype=torch.long)
    nll = []
    for t in range(width):
        dist, state = model.step(prev, state, enc_sel, keys, mask_sel, ext_sel, n_ext)
        gold = tgt[:, t]
        p = dist.gather(1, gold.unsqueeze(1)).squeeze(1)
        nll.append(-torch.log(p.clamp(min=1e-12)) * (gold != PAD))
        prev = torch.where(gold < model.config.vocab_size, gold, torch.full_like(gold, UNK))
    dec = torch.stack(nll, 1).sum() / (tgt != PAD).sum()
    return loss + model.config.decoder_weight * dec


def evaluate_rewrites(model: QrModel, examples: Iterable[QrExample]) -> dict[str, float]:
    from .metrics import exact_match_rewrite

    totals: dict[str, list[int]] = {}
    correct_class = n = 0
    for ex in examples:
        res = rewrite_dialog(model, ex.turns, ex.query)
        n += 1
        correct_class += res.rewrite_class is ex.rewrite_class
        bucket = totals.setdefault(ex.rewrite_class.value, [0, 0])
        bucket[0] += exact_match_rewrite(res.text, ex.rewrite)
        bucket[1] += 1
    out = {f"em_{k}": v[0] / v[1] for k, v in totals.items()}
    out["class_accuracy"] = correct_class / n if n else 1.0
    return out


def train_qr(
    model: QrModel,
    train: Sequence[QrExample],
    val: Sequence[QrExample] = (),
    cfg: TrainConfig | None = None,
    **resume: Any,
) -> tuple[QrModel, TrainReport]:
    cfg = cfg or DEFAULT_TRAIN

    def validate(m: QrModel) -> dict[str, float]:
        return evaluate_rewrites(m, val) if val else {}

    _, report = run_epochs(model, train, joint_loss, cfg, validate=validate, name="qr", **resume)
    return model, report
