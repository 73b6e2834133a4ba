"""Benchmark runner: MD / MR (gold mentions) / MDMR / QR rows with P, R, F1 and EM.

Published reference figures are printed next to measured ones for context
only; they were measured on different (proprietary) data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import detector, metrics, resolver, rewriter
from .core import Mention, RewriteClass
from .datagen.samples import ResolutionSample
from .pipeline import Models, Pipeline, PipelineConfig
from .rewriter import QrExample
from .text import detokenize
from .training import count_parameters

# (P, R, F1, EM) in percent; None where no figure was published.
REFERENCE: dict[tuple[str, str], tuple[float | None, ...]] = {
    ("MD", "screen"): (89.66, 95.74, 92.60, None),
    ("MD", "conversational"): (85.30, 92.60, 88.80, None),
    ("MD", "synthetic"): (99.00, 99.70, 99.30, None),
    ("MR", "screen"): (87.99, 85.87, 86.92, None),
    ("MR", "conversational"): (85.62, 96.91, 90.92, None),
    ("MR", "synthetic"): (98.09, 97.53, 97.81, None),
    ("MDMR", "screen"): (86.85, 80.20, 83.39, 80.8),
    ("MDMR", "conversational"): (84.70, 95.66, 89.85, 91.50),
    ("MDMR", "synthetic"): (97.92, 97.21, 97.56, 96.90),
    ("QR", "AER"): (92.48, 90.42, 91.44, 87.83),
    ("QR", "CbR"): (93.31, 83.48, 88.12, 71.44),
}
REFERENCE_PARAMS = {"md": 116_000, "mr": 196_000, "qr": 4_500_000}


class VocabularyMismatch(ValueError):
    """A model was trained on a vocabulary other than the one the dataset declares."""


@dataclass
class Suite:
    """One evaluation dataset with the models that serve it."""

    name: str
    samples: Sequence[ResolutionSample] | Sequence[QrExample]
    models: Models
    manifest: Mapping[str, Any] | None = None

    @property
    def is_rewrite(self) -> bool:
        return bool(self.samples) and isinstance(self.samples[0], QrExample)


@dataclass
class Row:
    model: str
    dataset: str
    precision: float
    recall: float
    f1: float
    exact_match: float | None
    count: int
    reference: tuple[float | None, ...] = ()
    macro_f1: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model, "dataset": self.dataset, "precision": self.precision,
            "recall": self.recall, "f1": self.f1, "exact_match": self.exact_match,
            "macro_f1": self.macro_f1, "count": self.count,
            "reference": dict(zip(("precision", "recall", "f1", "exact_match"), self.reference)),
        }


@dataclass
class Report:
    rows: list[Row] = field(default_factory=list)
    latency_ms: dict[str, float] = field(default_factory=dict)
    parameters: dict[str, int] = field(default_factory=dict)
    errors: list[dict[str, Any]] = field(default_factory=list)

    def row(self, model: str, dataset: str) -> Row:
        for r in self.rows:
            if r.model == model and r.dataset == dataset:
                return r
        raise KeyError((model, dataset))

    def to_dict(self) -> dict[str, Any]:
        return {"rows": [r.to_dict() for r in self.rows], "latency_ms": self.latency_ms,
                "parameters": self.parameters}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        def pct(v):
            return "    -" if v is None else f"{100 * v:5.1f}"

        def ref(v):
            return "    -" if v is None else f"{v:5.1f}"

        lines = [f"{'model':<5} {'dataset':<15} {'P':>5} {'R':>5} {'F1':>5} {'EM':>5} {'n':>6}   "
                 f"| reference {'P':>5} {'R':>5} {'F1':>5} {'EM':>5}"]
        lines.append("-" * len(lines[0]))
        for r in self.rows:
            refs = tuple(r.reference) + (None,) * (4 - len(r.reference))
            lines.append(
                f"{r.model:<5} {r.dataset:<15} {pct(r.precision)} {pct(r.recall)} {pct(r.f1)} "
                f"{pct(r.exact_match)} {r.count:>6}   |           {' '.join(ref(v) for v in refs)}"
            )
        if self.latency_ms:
            lines.append("")
            lines.append("latency (ms): " + "  ".join(f"{k} {v:.2f}" for k, v in self.latency_ms.items()))
        if self.parameters:
            lines.append("parameters:   " + "  ".join(
                f"{k} {v:,} (reference {REFERENCE_PARAMS.get(k.split(':')[-1], 0):,})" for k, v in self.parameters.items()
            ))
        return "\n".join(lines)

    def write(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(self.to_text() + "\n")
        (out / "report.json").write_text(self.to_json() + "\n")
        with open(out / "errors.jsonl", "w", encoding="utf-8") as f:
            for e in self.errors:
                f.write(json.dumps(e, sort_keys=True, ensure_ascii=False) + "\n")


def check_vocabulary(suite: Suite) -> None:
    declared = (suite.manifest or {}).get("vocab_hashes", {})
    for kind, model in (("md", suite.models.md), ("mr", suite.models.mr), ("qr", suite.models.qr)):
        if model is None or kind not in declared:
            continue
        if model.vocab.hash != declared[kind]:
            raise VocabularyMismatch(
                f"{suite.name}: {kind} model vocabulary {model.vocab.hash} differs from the "
                f"dataset's {declared[kind]}; the model was trained on other data"
            )


def _md_row(suite: Suite, report: Report, config: PipelineConfig) -> None:
    pred, gold = [], []
    for i, s in enumerate(suite.samples):
        found = [m.span for m in detector.detect(suite.models.md, s.tokens, s.entities,
                                                 use_rules=config.enable_rule_md)]
        pred.append(found)
        gold.append(s.spans)
        if set(found) != set(s.spans):
            report.errors.append({"row": "MD", "dataset": suite.name, "index": i, "utterance": s.utterance,
                                  "predicted": sorted(found), "gold": sorted(s.spans)})
    m = metrics.span_scores(pred, gold)
    report.rows.append(Row("MD", suite.name, m.precision, m.recall, m.f1, None, m.count,
                           REFERENCE.get(("MD", suite.name), ()), m.macro_f1))


def _mr_row(suite: Suite, report: Report, config: PipelineConfig) -> None:
    pred, gold = [], []
    for i, s in enumerate(suite.samples):
        toks = s.tokens
        # A gold span the string matcher also finds carries the same candidate link MD would give it.
        linked = ({m.span: m.rule_candidate_entity for m in detector.detect_rules(toks, s.entities)}
                  if config.enable_rule_md else {})
        p: dict[int, list[str]] = {}
        g: dict[int, list[str]] = {}
        for k, gm in enumerate(s.mentions):
            mention = Mention(gm.start, gm.end, detokenize(toks[gm.start:gm.end]),
                              rule_candidate_entity=linked.get((gm.start, gm.end)))
            res = resolver.resolve(mention, s.entities, toks, suite.models.mr, turns=s.turns,
                                   flags=config.rule_flags)
            p[k], g[k] = res.entity_ids, list(gm.gold_ids)
        pred.append(p)
        gold.append(g)
        if metrics.pooled_ids(p) != metrics.pooled_ids(g):
            report.errors.append({"row": "MR", "dataset": suite.name, "index": i, "utterance": s.utterance,
                                  "predicted": sorted(metrics.pooled_ids(p)), "gold": sorted(metrics.pooled_ids(g))})
    m = metrics.resolution_scores(pred, gold)
    report.rows.append(Row("MR", suite.name, m.precision, m.recall, m.f1, m.exact_match, m.count,
                           REFERENCE.get(("MR", suite.name), ()), m.macro_f1))


def _mdmr_row(suite: Suite, report: Report, config: PipelineConfig, latencies: list[float]) -> None:
    pred, gold = [], []
    with Pipeline(suite.models, config, workers=1) as pipe:
        for i, s in enumerate(suite.samples):
            trace = pipe.trace(s.snapshot())
            latencies.append(trace.timings["total"])
            p = {k: r.entity_ids for k, r in enumerate(trace.output.resolutions)}
            g = {k: list(gm.gold_ids) for k, gm in enumerate(s.mentions)}
            pred.append(p)
            gold.append(g)
            if metrics.pooled_ids(p) != metrics.pooled_ids(g):
                report.errors.append({
                    "row": "MDMR", "dataset": suite.name, "index": i, "utterance": s.utterance,
                    "predicted": sorted(metrics.pooled_ids(p)), "gold": sorted(metrics.pooled_ids(g)),
                    "mentions": [r.mention.to_dict() for r in trace.output.resolutions],
                })
    m = metrics.resolution_scores(pred, gold)
    report.rows.append(Row("MDMR", suite.name, m.precision, m.recall, m.f1, m.exact_match, m.count,
                           REFERENCE.get(("MDMR", suite.name), ()), m.macro_f1))


def _qr_rows(suite: Suite, report: Report, config: PipelineConfig, latencies: list[float]) -> None:
    model = suite.models.qr
    if model is None:
        raise ValueError(f"{suite.name}: rewrite dataset needs a qr model")
    rows = []
    for i, ex in enumerate(suite.samples):
        res = rewriter.rewrite_dialog(model, ex.turns, ex.query, config.turn_window)
        rows.append((res.text, ex.rewrite, ex.query, ex.rewrite_class.value))
        if metrics.exact_match_rewrite(res.text, ex.rewrite) == 0:
            report.errors.append({"row": "QR", "dataset": suite.name, "index": i, "query": ex.query,
                                  "class": ex.rewrite_class.value, "predicted_class": res.rewrite_class.value,
                                  "predicted": res.text, "gold": ex.rewrite})
    m = metrics.rewrite_scores(rows)
    for cls in (RewriteClass.AER, RewriteClass.CBR):
        c = m.per_class.get(cls.value)
        if c is None:
            continue
        report.rows.append(Row("QR", cls.value, c["precision"], c["recall"], c["f1"], c["exact_match"],
                               int(c["count"]), REFERENCE.get(("QR", cls.value), ())))
    none = m.per_class.get(RewriteClass.NONE.value)
    if none is not None:
        report.rows.append(Row("QR", "None", none["precision"], none["recall"], none["f1"],
                               none["exact_match"], int(none["count"])))


def run_benchmark(suites: Iterable[Suite], config: PipelineConfig = PipelineConfig()) -> Report:
    """Evaluate every suite; raises :class:`VocabularyMismatch` before scoring anything."""
    suites = list(suites)
    for s in suites:
        check_vocabulary(s)
    report = Report()
    latencies: list[float] = []
    for suite in suites:
        if suite.is_rewrite:
            _qr_rows(suite, report, config, latencies)
            continue
        _md_row(suite, report, config)
        _mr_row(suite, report, config)
        _mdmr_row(suite, report, config, latencies)
    if latencies:
        ms = np.asarray(latencies) * 1000.0
        report.latency_ms = {f"p{q}": float(np.percentile(ms, q)) for q in (50, 90, 99)}
        report.latency_ms["max"] = float(ms.max())
    for suite in suites:
        for kind, model in (("md", suite.models.md), ("mr", suite.models.mr), ("qr", suite.models.qr)):
            if model is not None:
                report.parameters.setdefault(f"{suite.name}:{kind}", count_parameters(model))
    return report
