"""Normalization, whitespace tokenization and word vocabularies."""

from __future__ import annotations

import hashlib
import unicodedata
from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

import torch

PAD, UNK, BOS, EOS, SEP, USR, AGT = range(7)
RESERVED = ("<pad>", "<unk>", "<bos>", "<eos>", "<sep>", "<usr>", "<agt>")


def _is_punct(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat.startswith("P") or cat.startswith("S")


def normalize(text: str) -> str:
    """Casefold, NFKC-fold, isolate punctuation and collapse whitespace."""
    text = unicodedata.normalize("NFKC", text).casefold()
    out = []
    for ch in text:
        if _is_punct(ch):
            out.append(f" {ch} ")
        elif ch.isspace():
            out.append(" ")
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def tokenize(text: str) -> list[str]:
    return text.split()


def detokenize(tokens: Sequence[str]) -> str:
    return " ".join(tokens)


_ATTACH_LEFT = set(".,!?;:%)]}'")


def surface(toks: Sequence[str]) -> str:
    """Readable rendering that re-attaches closing punctuation; normalizes back to ``toks``."""
    out = ""
    for t in toks:
        if out and t not in _ATTACH_LEFT:
            out += " "
        out += t
    return out


def tokens(text: str) -> list[str]:
    """``tokenize(normalize(text))``."""
    return tokenize(normalize(text))


class Vocabulary:
    """Token/id bijection with the reserved markers fixed at ids 0..6."""

    def __init__(self, words: Iterable[str] = ()):
        self.itos: list[str] = list(RESERVED)
        self.stoi: dict[str, int] = {w: i for i, w in enumerate(self.itos)}
        for w in words:
            if w not in self.stoi:
                self.stoi[w] = len(self.itos)
                self.itos.append(w)

    @classmethod
    def build(cls, sequences: Iterable[Sequence[str]], min_freq: int = 2,
              max_size: int | None = None) -> Vocabulary:
        """Tokens seen at least ``min_freq`` times, most frequent first, capped at ``max_size`` words."""
        counts: Counter[str] = Counter()
        for seq in sequences:
            counts.update(seq)
        kept = [w for w, c in counts.items() if c >= min_freq and w not in RESERVED]
        kept.sort(key=lambda w: (-counts[w], w))
        return cls(kept[:max_size])

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def id(self, token: str) -> int:
        return self.stoi.get(token, UNK)

    def encode(self, toks: Sequence[str]) -> list[int]:
        return [self.stoi.get(t, UNK) for t in toks]

    def decode(self, ids: Sequence[int]) -> list[str]:
        return [self.itos[i] for i in ids]

    @property
    def hash(self) -> str:
        return hashlib.sha256("\n".join(self.itos).encode("utf-8")).hexdigest()[:16]

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.itos) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> Vocabulary:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls.from_tokens(lines)

    @classmethod
    def from_tokens(cls, toks: Sequence[str]) -> Vocabulary:
        if tuple(toks[: len(RESERVED)]) != RESERVED:
            raise ValueError("vocabulary file does not start with the reserved markers")
        return cls(toks[len(RESERVED):])


def encode(toks: Sequence[str], vocab: Vocabulary) -> list[int]:
    return vocab.encode(toks)


def embed(ids: Sequence[int], table: torch.nn.Embedding | torch.Tensor) -> torch.Tensor:
    """One embedding row per id."""
    weight = table.weight if isinstance(table, torch.nn.Embedding) else table
    return weight[torch.as_tensor(list(ids), dtype=torch.long)]
