"""Command-line entry point: gen-data, train, eval, resolve, repl.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
Diagnostics go to stderr; stdout carries only the documented output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence, TextIO

import torch

from . import checkpoint, datagen, detector, resolver, rewriter
from .benchmark import Suite, VocabularyMismatch, run_benchmark
from .core import (
    Category, ContextError, ContextSnapshot, ConversationTurn, DialogStore, Entity,
    EntityLocation, Source, Speaker,
)
from .pipeline import Models, Pipeline, PipelineConfig, StartupError, output_json
from .training import TrainConfig, TrainReport, count_parameters, load_train_state, save_train_state

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3

log = logging.getLogger("dialogref")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class ModelError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- gen-data -------------------------------------------------------------------


def cmd_gen_data(args: argparse.Namespace) -> int:
    variants = datagen.VARIANTS if args.variant == "all" else (args.variant,)
    if args.sizes is not None and len(variants) > 1:
        raise UsageError("--sizes applies to a single variant")
    for v in variants:
        t = time.perf_counter()
        manifest = datagen.write_dataset(v, args.seed, args.out_dir, args.sizes)
        log.info("%s: wrote %s in %.1fs", v, manifest["sizes"], time.perf_counter() - t)
        print(json.dumps(manifest, sort_keys=True))
    return EXIT_OK


# -- train ------------------------------------------------------------------------


def _rows(path: str) -> list[dict]:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"dataset not found: {path}")
    try:
        rows = datagen.read_jsonl(p)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if not rows:
        raise DataError(f"dataset is empty: {path}")
    return rows


def load_examples(kind: str, path: str) -> list:
    rows = _rows(path)
    try:
        if kind == "md":
            return [detector.MdExample.from_dict(r) for r in rows]
        if kind == "mr":
            out = []
            for r in rows:
                if "request" in r:
                    out.append(resolver.MrExample.from_dict(r))
                else:
                    out += datagen.mr_examples([datagen.ResolutionSample.from_dict(r)])
            return out
        return [rewriter.QrExample.from_dict(r) for r in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed {kind} example: {exc}") from exc


_MODULES = {"md": detector, "mr": resolver, "qr": rewriter}
_MODEL_CLASSES = {"md": detector.MdModel, "mr": resolver.MrModel, "qr": rewriter.QrModel}
_TRAINERS = {"md": detector.train_md, "mr": resolver.train_mr, "qr": rewriter.train_qr}


def cmd_train(args: argparse.Namespace) -> int:
    train = load_examples(args.model, args.train)
    val = load_examples(args.model, args.val) if args.val else []
    out = Path(args.out)
    state_path = out.with_name(out.name + ".state")
    defaults = _MODULES[args.model].DEFAULT_TRAIN
    cfg = TrainConfig(
        epochs=args.epochs if args.epochs is not None else defaults.epochs,
        batch_size=args.batch_size or defaults.batch_size,
        lr=args.lr or defaults.lr,
        seed=args.seed,
    )
    torch.manual_seed(cfg.seed)
    resume: dict[str, Any] = {}
    if args.resume and out.is_file() and state_path.is_file():
        try:
            model = _MODEL_CLASSES[args.model].load(out)
        except checkpoint.CheckpointError as exc:
            raise ModelError(str(exc)) from exc
        model.train()
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)
        resume = {"optimizer": optimizer, "report": load_train_state(state_path, optimizer)}
        log.info("resuming %s from epoch %d", out, resume["report"].epochs_run)
    else:
        extra = {k: v for k, v in (("dim", args.dim), ("hidden", args.hidden)) if v is not None}
        model = _MODULES[args.model].new_model(train, min_freq=args.min_freq, **extra)
        resume = {"optimizer": torch.optim.Adam(model.parameters(), lr=cfg.lr), "report": TrainReport()}
    start = time.perf_counter()
    model, report = _TRAINERS[args.model](model, train, val, cfg, **resume)
    elapsed = time.perf_counter() - start
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = {"train": str(args.train), "epochs": report.epochs_run, "seed": cfg.seed}
    model.save(out, meta)
    save_train_state(state_path, resume["optimizer"], report)
    summary = {
        "model": args.model, "checkpoint": str(out), "parameters": count_parameters(model),
        "vocab_hash": model.vocab.hash, "seconds": round(elapsed, 2), **report.to_dict(),
    }
    Path(str(out) + ".log.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# -- eval -------------------------------------------------------------------------


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    try:
        return PipelineConfig(
            md_threshold=args.md_threshold, mr_threshold=args.mr_threshold, max_rewrite=args.max_rewrite,
            turn_window=args.turn_window, enable_rule_md=not args.no_rule_md,
            enable_rule_mr=not args.no_rule_mr, enable_screen_spatial_rules=args.screen_spatial,
            concurrent=not args.sequential, md_path=args.md, mr_path=args.mr, qr_path=args.qr,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_models(config: PipelineConfig) -> Models:
    try:
        return Models.load(config)
    except StartupError as exc:
        raise ModelError(str(exc)) from exc


def cmd_eval(args: argparse.Namespace) -> int:
    config = _pipeline_config(args)
    data = Path(args.data)
    manifest_path = data / "manifest.json"
    if not manifest_path.is_file():
        raise DataError(f"no manifest.json in {data}")
    manifest = json.loads(manifest_path.read_text())
    split = data / f"{args.split}.jsonl"
    rows = _rows(str(split))
    variant = manifest.get("variant")
    try:
        if variant == "qr":
            samples = [rewriter.QrExample.from_dict(r) for r in rows]
        else:
            samples = [datagen.ResolutionSample.from_dict(r) for r in rows]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{split}: {exc}") from exc
    models = _load_models(config)
    if variant == "qr" and models.qr is None:
        raise UsageError("a qr dataset needs --qr")
    if variant != "qr" and models.md is None and models.mr is None:
        raise UsageError("a resolution dataset needs --md and/or --mr")
    try:
        report = run_benchmark([Suite(variant, samples, models, manifest)], config)
    except VocabularyMismatch as exc:
        raise ModelError(str(exc)) from exc
    if args.out:
        report.write(args.out)
    print(report.to_json() if args.json else report.to_text())
    return EXIT_OK


# -- resolve ------------------------------------------------------------------------


def cmd_resolve(args: argparse.Namespace) -> int:
    config = _pipeline_config(args)
    text = sys.stdin.read() if args.input in (None, "-") else _read_file(args.input)
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed request JSON: {exc}") from exc
    many = isinstance(payload, list)
    try:
        snapshots = [ContextSnapshot.from_dict(p) for p in (payload if many else [payload])]
    except (ContextError, KeyError, TypeError, ValueError) as exc:
        raise DataError(f"invalid request: {exc}") from exc
    models = _load_models(config)
    with Pipeline(models, config) as pipe:
        traces = pipe.trace_batch(snapshots)
    for t in traces:
        for d in t.diagnostics:
            print(f"warning: {d}", file=sys.stderr)
    outs = [t.output.to_dict() for t in traces]
    print(json.dumps(outs if many else outs[0], sort_keys=True, ensure_ascii=False))
    return EXIT_OK


def _read_file(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


# -- repl -----------------------------------------------------------------------------

REPL_HELP = """directives:
  :agent <text>            add an agent turn
  :present <json>          agent turn presenting entities: {"utterance": ..., "entities": [...]}
  :screen <json>           replace on-screen entities (an entity object or a list)
  :entity <json>           register any entity
  :alarm ringing | :timer ringing | :music playing | :movie playing | :notification unread
  :reset                   clear turns and entities
  :help                    show this text
  :quit                    exit"""

_BACKGROUND = {
    "alarm": (Category.ALARM, ("alarm",), {"firing": "true"}),
    "timer": (Category.TIMER, ("timer",), {"firing": "true"}),
    "music": (Category.MUSIC, ("song",), {"playing": "true"}),
    "movie": (Category.MOVIE, ("movie",), {"playing": "true"}),
    "notification": (Category.NOTIFICATION, ("notification",), {"unread": "true"}),
}


class Repl:
    def __init__(self, pipe: Pipeline, out: TextIO, err: TextIO, window: int):
        self.pipe, self.out, self.err, self.window = pipe, out, err, window
        self.reset()

    def reset(self) -> None:
        self.store = DialogStore(self.window)
        self.ordinal = 0
        self.screen_ids: list[str] = []
        self.auto = 0

    def _next(self) -> int:
        self.ordinal += 1
        return self.ordinal

    def _entities(self, payload: Any, source: Source | None = None) -> list[Entity]:
        items = payload if isinstance(payload, list) else [payload]
        out = []
        for d in items:
            d = dict(d)
            if "id" not in d:
                self.auto += 1
                d["id"] = f"e{self.auto}"
            if source is not None:
                d.setdefault("source", source.value)
            out.append(Entity.from_dict(d))
        return out

    def directive(self, line: str) -> bool:
        """Handle one ``:`` line; returns False when the loop should stop."""
        name, _, rest = line[1:].partition(" ")
        rest = rest.strip()
        try:
            if name == "quit":
                return False
            if name == "help":
                print(REPL_HELP, file=self.out)
            elif name == "reset":
                self.reset()
            elif name == "agent":
                self.store.append_turn(ConversationTurn(Speaker.AGENT, rest, (), self._next()))
            elif name == "present":
                d = json.loads(rest)
                ents = self._entities(d.get("entities", []), Source.CONVERSATIONAL)
                self.store.register_entities(ents)
                self.store.append_turn(ConversationTurn(Speaker.AGENT, d.get("utterance", ""),
                                                        tuple(e.id for e in ents), self._next()))
            elif name == "screen":
                ents = self._entities(json.loads(rest), Source.SCREEN)
                self.store.retire_entities(self.screen_ids)
                self.store.register_entities(ents)
                self.screen_ids = [e.id for e in ents]
            elif name == "entity":
                self.store.register_entities(self._entities(json.loads(rest)))
            elif name in _BACKGROUND:
                cat, texts, meta = _BACKGROUND[name]
                self.auto += 1
                self.store.register_entities([Entity(f"{name}{self.auto}", cat, texts, EntityLocation(),
                                                     Source.BACKGROUND, meta)])
            else:
                print(f"warning: unknown directive :{name} (try :help)", file=self.err)
        except (json.JSONDecodeError, ContextError, KeyError, TypeError, ValueError) as exc:
            print(f"warning: :{name} ignored: {exc}", file=self.err)
        return True

    def utterance(self, line: str) -> None:
        trace = self.pipe.trace(self.store.snapshot(line))
        for d in trace.diagnostics:
            print(f"warning: {d}", file=self.err)
        print(output_json(trace.output), file=self.out)
        self.store.append_turn(ConversationTurn(Speaker.USER, line, (), self._next()))

    def run(self, lines) -> int:
        for raw in lines:
            line = raw.strip()
            if not line:
                continue
            if line.startswith(":"):
                if not self.directive(line):
                    break
            else:
                self.utterance(line)
            self.out.flush()
        return EXIT_OK


def cmd_repl(args: argparse.Namespace) -> int:
    config = _pipeline_config(args)
    models = _load_models(config)
    with Pipeline(models, config, workers=1) as pipe:
        return Repl(pipe, sys.stdout, sys.stderr, config.turn_window).run(sys.stdin)


# -- parser ---------------------------------------------------------------------------


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    d = PipelineConfig()
    p.add_argument("--md", help="mention detector checkpoint")
    p.add_argument("--mr", help="mention resolver checkpoint")
    p.add_argument("--qr", help="query rewriter checkpoint")
    p.add_argument("--md-threshold", type=float, default=d.md_threshold)
    p.add_argument("--mr-threshold", type=float, default=d.mr_threshold)
    p.add_argument("--max-rewrite", type=int, default=d.max_rewrite, help="rewrite length cap in tokens")
    p.add_argument("--turn-window", type=int, default=d.turn_window, help="dialog turns kept as context")
    p.add_argument("--no-rule-md", action="store_true", help="disable entity-text matching in detection")
    p.add_argument("--no-rule-mr", action="store_true", help="disable ordinal and keyword resolution rules")
    p.add_argument("--screen-spatial", action="store_true", help="enable top/bottom/left/right screen rules")
    p.add_argument("--sequential", action="store_true", help="run the two paths one after the other")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dialogref", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file of flag defaults (keys are flag names with underscores)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-data", help="generate datasets and a manifest")
    g.add_argument("--variant", required=True, choices=(*datagen.VARIANTS, "all"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sizes", type=int, nargs=3, metavar=("TRAIN", "VAL", "TEST"))
    g.add_argument("--out-dir", default="data")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train one model")
    t.add_argument("--model", required=True, choices=("md", "mr", "qr"))
    t.add_argument("--train", required=True, help="training JSONL")
    t.add_argument("--val", help="validation JSONL")
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--epochs", type=int)
    t.add_argument("--batch-size", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--min-freq", type=int, default=2)
    t.add_argument("--dim", type=int)
    t.add_argument("--hidden", type=int)
    t.add_argument("--resume", action="store_true", help="continue from --out and its .state file")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="benchmark checkpoints on a generated dataset")
    e.add_argument("--data", required=True, help="dataset directory holding manifest.json")
    e.add_argument("--split", default="test", choices=datagen.SPLITS)
    e.add_argument("--out", help="directory for report.txt, report.json and errors.jsonl")
    e.add_argument("--json", action="store_true", help="print the JSON report instead of the table")
    _add_pipeline_flags(e)
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("resolve", help="process request JSON (object or list) from a file or stdin")
    r.add_argument("--input", help="request file; '-' or omitted reads stdin")
    _add_pipeline_flags(r)
    r.set_defaults(func=cmd_resolve)

    i = sub.add_parser("repl", help="interactive session over stdin")
    _add_pipeline_flags(i)
    i.set_defaults(func=cmd_repl)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        values = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(values, dict):
        raise UsageError("config file must hold a JSON object")
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, sp in sub_action.choices.items():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in values.items() if k in dests})
    every = {a.dest for sp in sub_action.choices.values() for a in sp._actions} | {"config", "verbose"}
    unknown = set(values) - every
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"dialogref: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dialogref: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"dialogref: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ModelError as exc:
        print(f"dialogref: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
