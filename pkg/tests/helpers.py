"""Test utilities: entity factories and independent oracles for gradients and rewrite metrics."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable

import torch

from dialogref.core import BoundingBox, Category, ConversationTurn, Entity, EntityLocation, Source, Speaker
from dialogref.text import Vocabulary


def screen(eid: str, category: str, texts, x=0.1, y=0.1, w=0.3, h=0.1) -> Entity:
    return Entity(eid, Category(category), tuple(texts), EntityLocation(screen_box=BoundingBox(x, y, w, h)),
                  Source.SCREEN)


def listed(eid: str, category: str, texts, index: int, length: int) -> Entity:
    return Entity(eid, Category(category), tuple(texts), EntityLocation(list_index=index, list_length=length),
                  Source.CONVERSATIONAL)


def convo(eid: str, category: str, texts) -> Entity:
    return Entity(eid, Category(category), tuple(texts), EntityLocation(), Source.CONVERSATIONAL)


def background(eid: str, category: str, texts, **meta) -> Entity:
    return Entity(eid, Category(category), tuple(texts), EntityLocation(), Source.BACKGROUND, meta)


def vocab_of(*sentences: str) -> Vocabulary:
    words = sorted({w for s in sentences for w in s.split()})
    return Vocabulary(words)


ORDINALS = ["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth"]
SUFFIX = {1: "st", 2: "nd", 3: "rd"}


def ordinal_references(n):
    """Every (phrase, intended 1-based index or None) for a list of ``n`` items."""
    out = []
    for k in range(1, 11):
        want = k if k <= n else None
        word = ORDINALS[k - 1]
        out += [(f"the {word} one", want), (f"the {word}", want), (f"{word} result", want),
                (f"the {k}{SUFFIX.get(k, 'th')} one", want), (f"number {k}", want)]
        back = n + 1 - k if k <= n else None
        if k >= 2:
            out += [(f"the {word} to last one", back), (f"the {word} last one", back)]
    out += [("the last one", n), ("the last", n), ("the bottom one", n), ("the one at the bottom", n),
            ("the lower one", n), ("the top one", 1), ("the one at the top", 1), ("the upper one", 1)]
    return out


def list_of(n):
    ents = [listed(f"c{i}", "business", [f"Shop {i}"], i, n) for i in range(1, n + 1)]
    turns = (ConversationTurn(Speaker.AGENT, "here you go", tuple(e.id for e in ents), 1),)
    return ents, turns


def finite_difference_check(model: torch.nn.Module, loss_fn: Callable[[], torch.Tensor],
                            rel: float = 1e-4, floor: float = 1e-7, step: float = 1e-6) -> list[str]:
    """Compare autograd against central differences for every parameter element.

    The model must already be in float64. Returns a description of each
    element that disagrees; an empty list means the check passed.
    """
    model.zero_grad()
    loss_fn().backward()
    analytic = {n: p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)
                for n, p in model.named_parameters()}
    failures = []
    with torch.no_grad():
        for name, p in model.named_parameters():
            flat = p.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + step
                up = loss_fn().item()
                flat[i] = orig - step
                down = loss_fn().item()
                flat[i] = orig
                numeric = (up - down) / (2 * step)
                a = analytic[name].view(-1)[i].item()
                if abs(a - numeric) > max(rel * max(abs(a), abs(numeric)), floor):
                    failures.append(f"{name}[{i}]: analytic {a:.3e} numeric {numeric:.3e}")
    return failures


def restricted_f1_oracle(prediction: str, target: str, source: str) -> tuple[float, float, float]:
    """Carried-token P/R/F1 by explicit list removal, with exact rational arithmetic.

    Inputs must already be normalized space-separated text.
    """
    def minus_source(words):
        left = source.split()
        kept = []
        for w in words:
            if w in left:
                left.remove(w)
            else:
                kept.append(w)
        return kept

    gold = minus_source(target.split())
    pred = minus_source(prediction.split())
    pool = list(pred)
    hit = 0
    for w in gold:
        if w in pool:
            pool.remove(w)
            hit += 1
    p = Fraction(hit, len(pred)) if pred else Fraction(1)
    r = Fraction(hit, len(gold)) if gold else Fraction(1)
    f = 2 * p * r / (p + r) if p + r else Fraction(0)
    return float(p), float(r), float(f)
