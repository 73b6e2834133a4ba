"""Seeded synthetic corpora for mention detection, resolution and query rewriting.

Each variant is drawn from one deterministic stream of per-sample seeds
``"{variant}:{seed}:{i}"``; duplicates (same request and candidate set) are
dropped before the stream is cut into train/val/test, so no instantiation
crosses splits.
"""

from __future__ import annotations

import hashlib
import json
import random
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .. import detector, resolver, rewriter
from ..rewriter import QrExample
from .resolution import conversational_sample, screen_sample, synthetic_sample
from .rewrites import qr_pair
from .samples import ResolutionSample

VARIANTS = ("screen", "conversational", "synthetic", "qr")
SPLITS = ("train", "val", "test")
DEFAULT_SIZES: dict[str, tuple[int, int, int]] = {
    "screen": (7300, 700, 1900),
    "conversational": (2300, 400, 1200),
    "synthetic": (3900, 500, 1100),
    "qr": (30000, 3700, 3700),
}

_GENERATORS: dict[str, Callable[[random.Random], Any]] = {
    "screen": screen_sample,
    "conversational": conversational_sample,
    "synthetic": synthetic_sample,
    "qr": qr_pair,
}

_TEMPLATE_FILES = ("lexicon.py", "resolution.py", "rewrites.py", "entities.py", "samples.py")


def template_hash() -> str:
    """Fingerprint of the template bank; changes whenever any generator source changes."""
    h = hashlib.sha256()
    here = Path(__file__).parent
    for name in _TEMPLATE_FILES:
        h.update((here / name).read_bytes())
    return h.hexdigest()[:16]


def _key(sample: Any) -> tuple:
    if isinstance(sample, QrExample):
        return (tuple(t.utterance for t in sample.turns), sample.query)
    return sample.key()


def generate(variant: str, seed: int, n: int, *, start: int = 0) -> list:
    """``n`` samples from the variant's stream, without de-duplication."""
    if variant not in _GENERATORS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if n < 1:
        raise ValueError("n must be at least 1")
    gen = _GENERATORS[variant]
    return [gen(random.Random(f"{variant}:{seed}:{i}")) for i in range(start, start + n)]


def gen_screen(seed: int, n: int) -> list[ResolutionSample]:
    return generate("screen", seed, n)


def gen_conversational(seed: int, n: int) -> list[ResolutionSample]:
    return generate("conversational", seed, n)


def gen_synthetic_entities(seed: int, n: int) -> list[ResolutionSample]:
    return generate("synthetic", seed, n)


def gen_qr_pairs(seed: int, n: int) -> list[QrExample]:
    return generate("qr", seed, n)


def generate_splits(variant: str, seed: int, sizes: Sequence[int] | None = None,
                    max_draws_factor: int = 20) -> dict[str, list]:
    sizes = tuple(sizes or DEFAULT_SIZES[variant])
    if len(sizes) != 3 or min(sizes) < 1:
        raise ValueError("sizes must be three positive integers (train, val, test)")
    total = sum(sizes)
    gen = _GENERATORS.get(variant)
    if gen is None:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    seen: set = set()
    stream: list = []
    i = 0
    while len(stream) < total:
        if i >= total * max_draws_factor:
            raise RuntimeError(f"{variant}: only {len(stream)} distinct samples after {i} draws")
        s = gen(random.Random(f"{variant}:{seed}:{i}"))
        i += 1
        k = _key(s)
        if k not in seen:
            seen.add(k)
            stream.append(s)
    a, b = sizes[0], sizes[0] + sizes[1]
    return {"train": stream[:a], "val": stream[a:b], "test": stream[b:]}


def vocab_hashes(variant: str, train: Sequence) -> dict[str, str]:
    """Vocabulary hashes a model trained on ``train`` would carry, by model kind."""
    if variant == "qr":
        return {"qr": rewriter.build_vocab(train).hash}
    md = [detector.MdExample.from_dict(s.md_row()) for s in train]
    mr = [resolver.MrExample.from_dict(r) for s in train for r in s.mr_rows()]
    return {"md": detector.build_vocab(md).hash, "mr": resolver.build_vocab(mr).hash}


def write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: {exc.msg}") from exc
    return rows


def write_dataset(variant: str, seed: int, out_dir: str | Path, sizes: Sequence[int] | None = None) -> dict:
    """Write ``{out_dir}/{variant}/{split}.jsonl`` plus ``manifest.json``; returns the manifest."""
    splits = generate_splits(variant, seed, sizes)
    root = Path(out_dir) / variant
    root.mkdir(parents=True, exist_ok=True)
    for name, rows in splits.items():
        write_jsonl(root / f"{name}.jsonl", (r.to_dict() for r in rows))
    manifest = {
        "variant": variant,
        "seed": seed,
        "sizes": {k: len(v) for k, v in splits.items()},
        "template_hash": template_hash(),
        "vocab_hashes": vocab_hashes(variant, splits["train"]),
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


# -- loaders shared by training and evaluation ---------------------------------


def load_samples(path: str | Path) -> list[ResolutionSample]:
    return [ResolutionSample.from_dict(r) for r in read_jsonl(path)]


def md_examples(samples: Iterable[ResolutionSample]) -> list[detector.MdExample]:
    return [detector.MdExample.from_dict(s.md_row()) for s in samples]


def mr_examples(samples: Iterable[ResolutionSample]) -> list[resolver.MrExample]:
    return [resolver.MrExample.from_dict(r) for s in samples for r in s.mr_rows()]


def load_qr(path: str | Path) -> list[QrExample]:
    return [QrExample.from_dict(r) for r in read_jsonl(path)]
