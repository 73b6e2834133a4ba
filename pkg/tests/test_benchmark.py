import json

import pytest
import torch

from dialogref import datagen, detector, resolver, rewriter
from dialogref.benchmark import REFERENCE, Suite, VocabularyMismatch, check_vocabulary, run_benchmark
from dialogref.core import RewriteClass
from dialogref.pipeline import Models
from dialogref.training import TrainConfig

SIZES = (80, 10, 30)


@pytest.fixture(scope="module")
def small():
    """Small corpora with briefly trained desk-size models."""
    out = {}
    torch.manual_seed(0)
    for v in ("synthetic", "screen"):
        s = datagen.generate_splits(v, 0, SIZES)
        md_ex, mr_ex = datagen.md_examples(s["train"]), datagen.mr_examples(s["train"])
        md = detector.new_model(md_ex, min_freq=1)
        mr = resolver.new_model(mr_ex, min_freq=1)
        detector.train_md(md, md_ex, cfg=TrainConfig(epochs=1))
        resolver.train_mr(mr, mr_ex, cfg=TrainConfig(epochs=1))
        out[v] = (s, Models(md, mr))
    q = datagen.generate_splits("qr", 0, (200, 10, 60))
    qr = rewriter.new_model(q["train"], min_freq=1, dim=16, hidden=16)
    out["qr"] = (q, Models(qr=qr))
    return out


def suites(small):
    return [Suite(name, splits["test"], models) for name, (splits, models) in small.items()]


def test_rows_cover_every_suite(small):
    report = run_benchmark(suites(small))
    names = [(r.model, r.dataset) for r in report.rows]
    for v in ("synthetic", "screen"):
        assert [n for n in names if n[1] == v] == [("MD", v), ("MR", v), ("MDMR", v)]
    assert {n for n in names if n[0] == "QR"} <= {("QR", "AER"), ("QR", "CbR"), ("QR", "None")}
    for r in report.rows:
        assert 0.0 <= r.precision <= 1.0 and 0.0 <= r.recall <= 1.0 and 0.0 <= r.f1 <= 1.0
        assert r.reference == REFERENCE.get((r.model, r.dataset), ())
    assert report.row("MD", "synthetic").exact_match is None
    assert report.row("MDMR", "screen").count == SIZES[2]


def test_report_is_deterministic(small):
    a = run_benchmark(suites(small)).to_dict()
    b = run_benchmark(suites(small)).to_dict()
    assert a["rows"] == b["rows"] and a["parameters"] == b["parameters"]


def test_latency_and_parameters(small):
    report = run_benchmark(suites(small))
    assert set(report.latency_ms) == {"p50", "p90", "p99", "max"}
    assert report.latency_ms["p50"] <= report.latency_ms["p99"] <= report.latency_ms["max"]
    assert report.parameters["synthetic:md"] == sum(p.numel() for p in small["synthetic"][1].md.parameters())


def test_errors_match_exact_match(small):
    splits, models = small["synthetic"]
    report = run_benchmark([Suite("synthetic", splits["test"], models)])
    wrong = [e for e in report.errors if e["row"] == "MDMR"]
    em = report.row("MDMR", "synthetic").exact_match
    assert len(wrong) == round((1 - em) * SIZES[2])


def test_write(small, tmp_path):
    report = run_benchmark(suites(small))
    report.write(tmp_path / "out")
    text = (tmp_path / "out" / "report.txt").read_text()
    assert "MDMR" in text and "reference" in text and "latency" in text
    assert json.loads((tmp_path / "out" / "report.json").read_text()) == json.loads(report.to_json())
    lines = (tmp_path / "out" / "errors.jsonl").read_text().splitlines()
    assert len(lines) == len(report.errors)


def test_qr_row_prints_reference(small):
    splits, models = small["qr"]
    report = run_benchmark([Suite("qr", splits["test"], models)])
    aer = report.row("QR", RewriteClass.AER.value)
    assert aer.reference[3] == 87.83
    assert "87.8" in report.to_text()


def test_vocabulary_mismatch(small):
    splits, models = small["synthetic"]
    manifest = {"vocab_hashes": {"md": "0" * 16}}
    with pytest.raises(VocabularyMismatch, match="md model vocabulary"):
        run_benchmark([Suite("synthetic", splits["test"], models, manifest)])
    ok = {"vocab_hashes": {"md": models.md.vocab.hash}}
    check_vocabulary(Suite("synthetic", splits["test"], models, ok))


def test_qr_suite_needs_a_rewriter(small):
    splits, _ = small["qr"]
    with pytest.raises(ValueError, match="qr model"):
        run_benchmark([Suite("qr", splits["test"], Models())])

