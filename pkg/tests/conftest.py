"""Session fixtures: generated corpora and full-scale trained models.

Training every model takes several minutes on one CPU, so checkpoints are
cached under pytest's cache directory keyed by a hash of the package
sources. ``pytest --cache-clear`` forces a fresh run.
"""

from __future__ import annotations

import hashlib
import time
from pathlib import Path

import pytest
import torch

import dialogref
from dialogref import datagen, detector, resolver, rewriter
from dialogref.benchmark import Suite, run_benchmark
from dialogref.pipeline import Models, PipelineConfig

RESOLUTION_VARIANTS = ("screen", "conversational", "synthetic")


def _source_hash() -> str:
    h = hashlib.sha256()
    root = Path(dialogref.__file__).parent
    for path in sorted(root.rglob("*.py")):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


@pytest.fixture(scope="session")
def corpora():
    timings = {}
    out = {}
    for v in datagen.VARIANTS:
        t = time.perf_counter()
        out[v] = datagen.generate_splits(v, 0)
        timings[v] = time.perf_counter() - t
    out["_seconds"] = timings
    return out


def _train(kind: str, train, path: Path):
    module = {"md": detector, "mr": resolver, "qr": rewriter}[kind]
    trainer = {"md": detector.train_md, "mr": resolver.train_mr, "qr": rewriter.train_qr}[kind]
    torch.manual_seed(0)
    model = module.new_model(train)
    trainer(model, train, (), module.DEFAULT_TRAIN)
    model.save(path)


@pytest.fixture(scope="session")
def trained(corpora, request):
    """Models per dataset, trained on its train split with the package defaults.

    Returns ``{variant: Models}`` plus ``"_seconds"``: wall time spent training
    per (variant, kind), zero for checkpoints reused from the cache.
    """
    cache = Path(request.config.cache.mkdir(f"dialogref-models-{_source_hash()}"))
    seconds: dict[str, float] = {}

    def get(name: str, kind: str, train):
        path = cache / f"{name}.{kind}.ckpt"
        t = time.perf_counter()
        if not path.is_file():
            _train(kind, train, path)
        seconds[f"{name}:{kind}"] = time.perf_counter() - t
        cls = {"md": detector.MdModel, "mr": resolver.MrModel, "qr": rewriter.QrModel}[kind]
        return cls.load(path)

    out = {}
    for v in RESOLUTION_VARIANTS:
        train = corpora[v]["train"]
        md = get(v, "md", datagen.md_examples(train))
        mr = get(v, "mr", datagen.mr_examples(train))
        out[v] = Models(md=md, mr=mr)
    out["qr"] = Models(qr=get("qr", "qr", corpora["qr"]["train"]))
    out["_seconds"] = seconds
    return out


@pytest.fixture(scope="session")
def benchmark(corpora, trained):
    """The full benchmark report on every test split."""
    suites = [Suite(v, corpora[v]["test"], trained[v]) for v in (*RESOLUTION_VARIANTS, "qr")]
    t = time.perf_counter()
    report = run_benchmark(suites, PipelineConfig())
    report.seconds = time.perf_counter() - t
    return report
