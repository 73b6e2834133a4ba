"""Small helpers shared by the three trainers: seeding, batching, P/R/F1, resume state."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterator, Sequence, TypeVar

import numpy as np
import torch

log = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, n_pred: int, n_gold: int) -> PRF:
        # Zero denominators score 1: nothing predicted is never wrong, nothing to find is never missed.
        p = tp / n_pred if n_pred else 1.0
        r = tp / n_gold if n_gold else 1.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return cls(p, r, f)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    lr: float = 3e-3
    seed: int = 0
    clip: float = 5.0


@dataclass
class TrainReport:
    losses: list[float] = field(default_factory=list)
    validation: list[dict[str, Any]] = field(default_factory=list)
    epochs_run: int = 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def batches(items: Sequence[T], batch_size: int, seed: int, epoch: int) -> Iterator[list[T]]:
    """Shuffled batches; the order depends only on (seed, epoch) so resumed runs replay it."""
    order = np.random.default_rng([seed, epoch]).permutation(len(items))
    for i in range(0, len(items), batch_size):
        yield [items[j] for j in order[i : i + batch_size]]


def save_train_state(path: str | Path, optimizer: torch.optim.Optimizer, report: TrainReport) -> None:
    torch.save({"optimizer": optimizer.state_dict(), "report": report.to_dict()}, path)


def load_train_state(path: str | Path, optimizer: torch.optim.Optimizer) -> TrainReport:
    state = torch.load(path, weights_only=False)
    optimizer.load_state_dict(state["optimizer"])
    return TrainReport(**state["report"])


def run_epochs(
    model: torch.nn.Module,
    items: Sequence[T],
    loss_fn,
    cfg: TrainConfig,
    *,
    validate=None,
    optimizer: torch.optim.Optimizer | None = None,
    report: TrainReport | None = None,
    name: str = "model",
) -> tuple[torch.optim.Optimizer, TrainReport]:
    """Generic minibatch loop; ``loss_fn(model, batch)`` returns a scalar tensor.

    Training continues from ``report.epochs_run`` so a restored optimizer and
    report reproduce the uninterrupted run exactly.
    """
    if not items:
        raise ValueError("training dataset is empty")
    torch.manual_seed(cfg.seed)
    optimizer = optimizer or torch.optim.Adam(model.parameters(), lr=cfg.lr)
    report = report or TrainReport()
    for epoch in range(report.epochs_run, cfg.epochs):
        model.train()
        total, count = 0.0, 0
        for batch in batches(items, cfg.batch_size, cfg.seed, epoch):
            optimizer.zero_grad()
            loss = loss_fn(model, batch)
            loss.backward()
            if cfg.clip:
                torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.clip)
            optimizer.step()
            total += loss.item() * len(batch)
            count += len(batch)
        model.eval()
        report.losses.append(total / count)
        report.epochs_run = epoch + 1
        if validate is not None:
            metrics = validate(model)
            report.validation.append(metrics)
            log.info("%s epoch %d loss %.4f val %s", name, epoch + 1, report.losses[-1], metrics)
        else:
            log.info("%s epoch %d loss %.4f", name, epoch + 1, report.losses[-1])
    return optimizer, report


def count_parameters(model: torch.nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
