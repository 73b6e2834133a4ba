"""End-to-end request processing: query rewriting alongside detection + resolution.

The two paths read the same frozen snapshot and share nothing mutable except
the counters, so they may run on separate threads. Mention resolution runs
only when detection finds something.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

from . import checkpoint, detector, resolver, rewriter
from .core import ContextSnapshot, Resolution, RewriteClass, UnderstandingOutput
from .instrument import Counters, timed
from .rules import RuleFlags
from .text import tokens

log = logging.getLogger(__name__)


class StartupError(RuntimeError):
    """A model could not be loaded; raised before any request is served."""


@dataclass(frozen=True)
class PipelineConfig:
    md_threshold: float = 0.5
    mr_threshold: float = 0.5
    max_rewrite: int = rewriter.MAX_DECODE
    turn_window: int = 6
    enable_rule_md: bool = True
    enable_rule_mr: bool = True
    enable_screen_spatial_rules: bool = False
    concurrent: bool = True
    md_path: str | None = None
    mr_path: str | None = None
    qr_path: str | None = None

    def __post_init__(self) -> None:
        for name in ("md_threshold", "mr_threshold"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie strictly between 0 and 1, got {v}")
        if self.max_rewrite < 1:
            raise ValueError("max_rewrite must be positive")
        if self.turn_window < 1:
            raise ValueError("turn_window must be positive")

    @property
    def rule_flags(self) -> RuleFlags:
        return RuleFlags(self.enable_rule_mr, self.enable_screen_spatial_rules)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> PipelineConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown pipeline settings: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class Models:
    """Loaded models plus the shared invocation counters.

    Any model may be ``None`` to switch its path off: no detector model means
    rule-only detection, no resolver model means rule-only resolution and no
    rewriter means every request passes through unchanged.
    """

    md: detector.MdModel | None = None
    mr: resolver.MrModel | None = None
    qr: rewriter.QrModel | None = None
    counters: Counters = field(default_factory=Counters)

    def __post_init__(self) -> None:
        if self.qr is not None:
            self.qr.counters = self.counters

    @classmethod
    def load(cls, config: PipelineConfig) -> Models:
        def one(path: str | None, kind):
            if path is None:
                return None
            if not Path(path).is_file():
                raise StartupError(f"model checkpoint not found: {path}")
            try:
                return kind.load(path)
            except (checkpoint.CheckpointError, OSError, ValueError, KeyError) as exc:
                raise StartupError(f"cannot load {path}: {exc}") from exc

        models = cls(one(config.md_path, detector.MdModel), one(config.mr_path, resolver.MrModel),
                     one(config.qr_path, rewriter.QrModel))
        return models.configured(config)

    def configured(self, config: PipelineConfig) -> Models:
        """Apply thresholds and the rewrite length cap from ``config`` to the loaded models."""
        if self.md is not None:
            self.md.config = replace(self.md.config, threshold=config.md_threshold)
        if self.mr is not None:
            self.mr.config = replace(self.mr.config, threshold=config.mr_threshold)
        if self.qr is not None:
            self.qr.config = replace(self.qr.config, max_decode=config.max_rewrite)
        return self


@dataclass(frozen=True)
class Trace:
    output: UnderstandingOutput
    timings: dict[str, float]
    diagnostics: tuple[str, ...] = ()
    truncated: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {"output": self.output.to_dict(), "timings": self.timings,
                "diagnostics": list(self.diagnostics), "truncated": self.truncated}


def _rewrite_path(snapshot: ContextSnapshot, config: PipelineConfig, models: Models, timings: dict):
    with timed(timings, "qr"):
        if models.qr is None:
            return snapshot.current_utterance, RewriteClass.NONE, False
        res = rewriter.rewrite_dialog(models.qr, snapshot.turns, snapshot.current_utterance, config.turn_window)
        if res.rewrite_class is RewriteClass.NONE:
            return snapshot.current_utterance, res.rewrite_class, False
        return res.text, res.rewrite_class, res.truncated


def _resolution_path(snapshot: ContextSnapshot, config: PipelineConfig, models: Models, timings: dict):
    toks = tokens(snapshot.current_utterance)
    entities = list(snapshot.entities)
    with timed(timings, "md"):
        models.counters.incr("md")
        mentions = detector.detect(models.md, toks, entities, use_rules=config.enable_rule_md)
    if not mentions:
        return ()
    with timed(timings, "mr"):
        models.counters.incr("mr")
        return tuple(
            resolver.resolve(m, entities, toks, models.mr, turns=snapshot.turns,
                             flags=config.rule_flags, counters=models.counters)
            for m in mentions
        )


class Pipeline:
    """Owns the thread pools; use as a context manager or call :meth:`close`."""

    def __init__(self, models: Models, config: PipelineConfig = PipelineConfig(), workers: int = 4):
        self.models = models.configured(config)
        self.config = config
        self._paths = ThreadPoolExecutor(max_workers=2 * workers, thread_name_prefix="path")
        self._requests = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="request")

    def __enter__(self) -> Pipeline:
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def close(self) -> None:
        self._paths.shutdown(wait=True)
        self._requests.shutdown(wait=True)

    def trace(self, snapshot: ContextSnapshot) -> Trace:
        cfg, models = self.config, self.models
        qr_t: dict[str, float] = {}
        mr_t: dict[str, float] = {}
        start = time.perf_counter()
        if cfg.concurrent:
            qr_f = self._paths.submit(_rewrite_path, snapshot, cfg, models, qr_t)
            mr_f = self._paths.submit(_resolution_path, snapshot, cfg, models, mr_t)
            qr_get, mr_get = qr_f.result, mr_f.result
        else:
            qr_get = _deferred(_rewrite_path, snapshot, cfg, models, qr_t)
            mr_get = _deferred(_resolution_path, snapshot, cfg, models, mr_t)
        diagnostics = []
        try:
            rewritten, cls, truncated = qr_get()
        except Exception as exc:  # noqa: BLE001 - one path must not take down the other
            log.exception("rewrite path failed")
            diagnostics.append(f"rewrite path failed: {type(exc).__name__}: {exc}")
            rewritten, cls, truncated = snapshot.current_utterance, RewriteClass.NONE, False
        try:
            resolutions: tuple[Resolution, ...] = mr_get()
        except Exception as exc:  # noqa: BLE001
            log.exception("resolution path failed")
            diagnostics.append(f"resolution path failed: {type(exc).__name__}: {exc}")
            resolutions = ()
        if truncated:
            diagnostics.append(f"rewrite truncated at {cfg.max_rewrite} tokens")
        timings = {**qr_t, **mr_t, "total": time.perf_counter() - start}
        out = UnderstandingOutput(snapshot.current_utterance, rewritten, cls, resolutions)
        return Trace(out, timings, tuple(diagnostics), truncated)

    def process(self, snapshot: ContextSnapshot) -> UnderstandingOutput:
        return self.trace(snapshot).output

    def trace_batch(self, snapshots: Sequence[ContextSnapshot]) -> list[Trace]:
        return list(self._requests.map(self.trace, snapshots))

    def process_batch(self, snapshots: Sequence[ContextSnapshot]) -> list[UnderstandingOutput]:
        return [t.output for t in self.trace_batch(snapshots)]


def _deferred(fn, *args):
    """Run ``fn`` now; re-raise any failure only when the result is requested."""
    try:
        value = fn(*args)
    except Exception as exc:  # noqa: BLE001
        def fail():
            raise exc
        return fail
    return lambda: value


def process(snapshot: ContextSnapshot, config: PipelineConfig, models: Models) -> UnderstandingOutput:
    with Pipeline(models, config, workers=1) as p:
        return p.process(snapshot)


def process_batch(snapshots: Sequence[ContextSnapshot], config: PipelineConfig, models: Models) -> list[UnderstandingOutput]:
    with Pipeline(models, config) as p:
        return p.process_batch(snapshots)


def output_json(out: UnderstandingOutput) -> str:
    """Canonical one-line JSON used for byte-level comparisons and stdout."""
    return json.dumps(out.to_dict(), sort_keys=True, ensure_ascii=False)
