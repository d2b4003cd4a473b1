"""``surprobe`` command line.

Exit codes: 0 success, 1 partial or data failure (failed records, empty
groups, nothing matched), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .backend import CompletionsBackend, MockBackend, MockTable, ScoreRequest
from .errors import (
    BackendError,
    ConfigError,
    MetricError,
    NoMatch,
    PromptError,
    ScaleError,
    SurprobeError,
    UnknownFactor,
)
from .metrics import FACTORS, METRICS
from .prompts import FactorCell, TaskItem, TemplateRegistry, render
from .prompts.templates import CONTEXT_LEVELS, DELIMITERS, PERSONAS, TASKS
from .report import TableSpec, build_table, curve_documents, emit_curves, emit_tables, load_records, select, table_csv
from .runner import ExperimentConfig, resume, run
from .scales import completion_form, get_scale, load_catalog, presets
from .shape import analyze, classify_confidence
from .surprisal import build_curve

EXIT_OK, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2

DEFAULT_SCALE = {"sets": "1-9", "causal-binary": "true-false"}


def _csv_list(s: str) -> list[str]:
    return [p.strip() for p in s.split(",") if p.strip()]


def _filters(pairs: list[str]) -> dict[str, str]:
    out = {}
    for p in pairs or ():
        key, sep, value = p.partition("=")
        if not sep:
            raise ConfigError(f"filter {p!r} is not factor=value")
        out[key.strip()] = value.strip()
    return out


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="surprobe", description="Surprisal-curve evaluation of language models.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    for name, helptext in (("run", "execute a config from scratch"),
                           ("resume", "finish a partial run of the same config")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config")
        p.add_argument("--canonical", action="store_true", help="strip timestamps and latency from the output")
        p.add_argument("--concurrency", type=int)

    p = sub.add_parser("report", help="aggregate result records into a CSV table")
    p.add_argument("results")
    p.add_argument("--metric", required=True, choices=sorted(METRICS))
    p.add_argument("--group", type=_csv_list, default=[], help=f"comma list from: {', '.join(FACTORS)}")
    p.add_argument("--pivot", type=int, help="trailing group factors laid out as columns")
    p.add_argument("--average-over", help="factor to average the metric over inside each group")
    p.add_argument("--filter", action="append", metavar="FACTOR=GLOB")
    p.add_argument("--out", help="directory for CSV files (default: print to stdout)")
    p.add_argument("--name", help="table file name stem")
    p.add_argument("--full-precision", action="store_true", help="also write an unrounded companion CSV")

    p = sub.add_parser("curves", help="write per-item curve plot data")
    p.add_argument("results")
    p.add_argument("--filter", action="append", metavar="FACTOR=GLOB")
    p.add_argument("--out", help="directory for JSON files (default: print to stdout)")

    p = sub.add_parser("probe", help="render, score and print one prompt")
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--statement")
    p.add_argument("--entity")
    p.add_argument("--context-text", help="SETS usage context")
    p.add_argument("--text")
    p.add_argument("--code")
    p.add_argument("--definition")
    p.add_argument("--framing", default="default")
    p.add_argument("--scale")
    p.add_argument("--context", default="none", choices=CONTEXT_LEVELS)
    p.add_argument("--persona", default="none", choices=PERSONAS)
    p.add_argument("--delimiter", default="none", choices=DELIMITERS)
    p.add_argument("--model", default="mock")
    p.add_argument("--backend", default="mock", choices=("mock", "completions"))
    p.add_argument("--endpoint")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mock-table")
    p.add_argument("--templates", help="template override directory")
    p.add_argument("--show-prompt", action="store_true")
    p.add_argument("--json", action="store_true", help="print the curve as JSON")

    p = sub.add_parser("validate-config", help="check a config without running it")
    p.add_argument("config")

    p = sub.add_parser("list-scales", help="print the scale catalog")
    p.add_argument("--catalog", help="extra catalog file")
    p.add_argument("--json", action="store_true")
    return ap


# -- commands --------------------------------------------------------------------

def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    overrides = {}
    if getattr(args, "canonical", False):
        overrides["canonical"] = True
    if getattr(args, "concurrency", None) is not None:
        if args.concurrency < 1:
            raise ConfigError("--concurrency must be >= 1")
        overrides["concurrency"] = args.concurrency
    if overrides:
        d = cfg.to_dict()
        d.update(overrides)
        cfg = ExperimentConfig.from_dict(d, cfg.base_dir)
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args)
    summary = (resume if args.command == "resume" else run)(cfg)
    print(json.dumps({
        "output": summary.output,
        "records_written": summary.records_written,
        "failures": summary.failures,
        "failure_classes": dict(summary.failure_classes),
        "cache_hits": summary.cache_hits,
        "expected": summary.total,
    }, sort_keys=True))
    return EXIT_OK if summary.ok else EXIT_PARTIAL


def _records(path: str) -> list[dict]:
    if not Path(path).is_file():
        raise ConfigError(f"results file {path!r} not found")
    return load_records(path)


def cmd_report(args) -> int:
    records = select(_records(args.results), _filters(args.filter))
    spec = TableSpec(args.metric, tuple(args.group), args.pivot, args.average_over, args.name)
    if args.out:
        for path in emit_tables(records, [spec], args.out, args.full_precision):
            print(path)
    else:
        sys.stdout.write(table_csv(build_table(records, spec)))
    return EXIT_OK


def cmd_curves(args) -> int:
    records = _records(args.results)
    filt = _filters(args.filter)
    if args.out:
        for path in emit_curves(records, filt, args.out):
            print(path)
    else:
        docs = curve_documents(records, filt)
        print(json.dumps(list(docs.values()), indent=1, sort_keys=True))
    return EXIT_OK


def _probe_item(args) -> TaskItem:
    task = args.task
    if task == "sets":
        need = {"entity": args.entity, "context": args.context_text}
        payload = {**need, "expected": {}}
    elif task == "coding":
        need = {"text": args.text, "code": args.code, "definition": args.definition}
        payload = {**need, "applicable": False}
    else:
        need = {"statement": args.statement}
        payload = {**need, "causal": False, "figurative": False, "pair_id": "probe"}
    missing = [k for k, v in need.items() if v is None]
    if missing:
        flags = {"context": "--context-text"}
        raise ConfigError(f"--task {task} needs " + ", ".join(flags.get(k, "--" + k) for k in missing))
    return TaskItem("probe", task, payload)


def cmd_probe(args) -> int:
    item = _probe_item(args)
    registry = TemplateRegistry(args.templates)
    template = registry.get(item.task, args.framing)
    scale_id = args.scale or DEFAULT_SCALE.get(item.task, "1-5")
    scale = get_scale(scale_id)
    if item.task == "sets":
        # the dimension being asked about comes from the framing
        item = TaskItem(item.item_id, item.task, {**item.payload, "expected": {template.framing: scale.low}})
    cell = FactorCell(args.context, args.persona, args.delimiter, template.framing, scale.id, args.model)
    prompt = render(template.id, item, cell, scale, registry)
    if args.backend == "mock":
        backend = MockBackend(MockTable.load(args.mock_table) if args.mock_table else None, args.seed)
    else:
        backend = CompletionsBackend(args.endpoint) if args.endpoint else CompletionsBackend.from_env()
    positions = sorted(scale.positions)
    surfaces = tuple(completion_form(scale, p).surface for p in positions)
    try:
        scored = backend.score(ScoreRequest(args.model, prompt.context_text, surfaces, item.item_id))
    finally:
        if hasattr(backend, "close"):
            backend.close()
    curve = build_curve(scored, scale)
    shape = analyze(curve)
    if args.show_prompt:
        print(prompt.context_text + "‸")
        print()
    if args.json:
        doc = {
            "template": template.id,
            "scale": scale.id,
            "points": [[p, s] for p, s in zip(curve.positions, curve.surprisals)],
            "labels": [s.strip() for s in surfaces],
            "probs": list(curve.distribution.probs),
            "entropy": curve.entropy,
            "argmin": curve.argmin_position,
            "shape": shape.to_dict(),
        }
        if scale.is_binary:
            v = curve.binary_verdict()
            doc["binary"] = {"class": v.cls, "delta": v.delta}
        print(json.dumps(doc, indent=1))
        return EXIT_OK
    print(f"template {template.id}  scale {scale.id}  model {args.model}  backend {args.backend}")
    print(f"{'pos':>4}  {'label':<16}{'surprisal':>11}{'prob':>9}")
    for p, surface, s, pr in zip(curve.positions, surfaces, curve.surprisals, curve.distribution.probs):
        mark = " <" if p == curve.argmin_position else ""
        print(f"{p:>4}  {surface.strip():<16}{s:>11.4f}{pr:>9.4f}{mark}")
    print(f"entropy {curve.entropy:.4f} nats  argmin {curve.argmin_position}  "
          f"{shape.monotonicity}, {classify_confidence(shape)}")
    if scale.is_binary:
        v = curve.binary_verdict()
        print(f"verdict {v.cls} (delta {v.delta:.4f})")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    plan = cfg.validate()
    print(f"ok: {len(plan.items)} items x {len(plan.cells)} cells = {len(plan)} records; digest {cfg.digest()}")
    return EXIT_OK


def cmd_list_scales(args) -> int:
    scales = dict(presets())
    if args.catalog:
        scales.update(load_catalog(args.catalog))
    if args.json:
        print(json.dumps([s.to_dict() for s in scales.values()], indent=1))
        return EXIT_OK
    for s in scales.values():
        mid = "" if s.midpoint is None else f"  midpoint {s.midpoint}"
        labels = " ".join(f"{p}:{s.label_at(p)}" for p in sorted(s.positions))
        print(f"{s.id:<20}{s.kind:<21}{labels}{mid}")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "resume": cmd_run,
    "report": cmd_report,
    "curves": cmd_curves,
    "probe": cmd_probe,
    "validate-config": cmd_validate,
    "list-scales": cmd_list_scales,
}

# operator mistakes; everything else under SurprobeError is a data problem
_USAGE_ERRORS = (ConfigError, UnknownFactor, PromptError, ScaleError)


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except _USAGE_ERRORS as exc:
        print(f"surprobe: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MetricError, NoMatch, BackendError, SurprobeError, OSError) as exc:
        print(f"surprobe: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
