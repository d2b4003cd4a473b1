"""Factorial experiment runner: grid -> prompts -> scores -> curves -> records.

Records are appended as workers finish (so an interrupted run keeps its
progress) and the file is rewritten in item-major order at the end.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping

from .backend import CachedBackend, CompletionsBackend, MockBackend, MockTable, ScoreCache, ScoreRequest
from .backend.wire import ENV_API_KEY, ENV_ENDPOINT
from .errors import ConfigDigestMismatch, ConfigError, NonFiniteSurprisal, SurprobeError
from .prompts import FactorCell, FactorGrid, TaskItem, TemplateRegistry, load_dataset, load_sample, render
from .prompts.datasets import validate_items
from .scales import ScaleSpec, completion_form, get_scale, load_catalog
from .shape import analyze, classify_confidence
from .surprisal import build_curve

log = logging.getLogger(__name__)

SCHEMA = "surprobe.results/1"
ENV_CACHE = "SURPROBE_CACHE"
# fields that never change what a run computes
_DIGEST_EXCLUDE = {"concurrency", "cache", "output", "canonical"}
_VOLATILE = ("started_at", "finished_at", "latency_ms", "created_at")


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"
    endpoint: str | None = None
    api_key: str | None = None
    top_k: int = 20
    echo_fallback: bool = True
    max_attempts: int = 3
    backoff: float = 0.5
    timeout: float = 30.0
    mock_table: str | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class ExperimentConfig:
    run_id: str
    dataset: tuple[str, ...]
    grid: FactorGrid
    output: str
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    concurrency: int = 4
    cache: str | None = None
    seed: int = 0
    templates: str | None = None
    scales: str | None = None
    canonical: bool = False
    base_dir: str = "."

    __hash__ = None

    # -- loading -------------------------------------------------------------

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], base_dir: str | Path = ".") -> "ExperimentConfig":
        if not isinstance(d, Mapping):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        for key in ("run_id", "dataset", "grid", "output"):
            if key not in d:
                raise ConfigError(f"config lacks required key {key!r}")
        run_id = d["run_id"]
        if not isinstance(run_id, str) or not run_id.strip():
            raise ConfigError("run_id must be a non-empty string")
        dataset = d["dataset"]
        dataset = (dataset,) if isinstance(dataset, str) else tuple(dataset)
        if not dataset or not all(isinstance(p, str) for p in dataset):
            raise ConfigError("dataset must be a path or a non-empty list of paths")
        try:
            grid = FactorGrid.from_dict(d["grid"])
        except (SurprobeError, TypeError, AttributeError) as exc:
            raise ConfigError(f"bad grid: {exc}") from None
        prov = dict(d.get("provider", {}))
        unknown = sorted(set(prov) - set(ProviderConfig.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"unknown provider keys {unknown}")
        provider = ProviderConfig(**prov)
        if provider.kind not in ("mock", "completions"):
            raise ConfigError(f"provider kind must be 'mock' or 'completions', got {provider.kind!r}")
        concurrency = d.get("concurrency", 4)
        if isinstance(concurrency, bool) or not isinstance(concurrency, int) or concurrency < 1:
            raise ConfigError("concurrency must be an integer >= 1")
        seed = d.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise ConfigError("seed must be an integer")
        return cls(run_id, dataset, grid, d["output"], provider, concurrency, d.get("cache"), seed,
                   d.get("templates"), d.get("scales"), bool(d.get("canonical", False)), str(base_dir))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        try:
            d = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {str(path)!r} not found") from None
        except (ValueError, UnicodeDecodeError) as exc:
            raise ConfigError(f"config file {str(path)!r} is not valid JSON: {exc}") from None
        return cls.from_dict(d, path.parent)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "dataset": list(self.dataset),
            "grid": self.grid.to_dict(),
            "output": self.output,
            "provider": self.provider.to_dict(),
            "concurrency": self.concurrency,
            "cache": self.cache,
            "seed": self.seed,
            "templates": self.templates,
            "scales": self.scales,
            "canonical": self.canonical,
        }

    # -- paths ---------------------------------------------------------------

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        path = Path(os.path.expanduser(p))
        return path if path.is_absolute() else Path(self.base_dir) / path

    @property
    def output_path(self) -> Path:
        return self.resolve(self.output)

    @property
    def cache_path(self) -> Path | None:
        return self.resolve(self.cache or os.environ.get(ENV_CACHE))

    # -- derived -------------------------------------------------------------

    def load_items(self) -> list[TaskItem]:
        items: list[TaskItem] = []
        for ref in self.dataset:
            if ref.startswith("sample:"):
                try:
                    items.extend(load_sample(ref[len("sample:"):]))
                except KeyError:
                    raise ConfigError(f"unknown sample dataset {ref!r}") from None
                continue
            path = self.resolve(ref)
            if not path.exists():
                raise ConfigError(f"dataset {str(path)!r} not found")
            items.extend(load_dataset(path))
        return sorted(validate_items(items), key=lambda it: it.item_id)

    def scale_catalog(self) -> dict[str, ScaleSpec] | None:
        return load_catalog(self.resolve(self.scales)) if self.scales else None

    def registry(self) -> TemplateRegistry:
        return TemplateRegistry(self.resolve(self.templates))

    def _dataset_digest(self) -> list[str]:
        out = []
        for ref in self.dataset:
            if ref.startswith("sample:"):
                out.append(ref)
                continue
            path = self.resolve(ref)
            data = path.read_bytes() if path.exists() else b""
            out.append(hashlib.sha256(data).hexdigest())
        return out

    def digest(self) -> str:
        """SHA-256 over the canonical config minus credentials and
        operational knobs, plus the dataset contents."""
        d = {k: v for k, v in self.to_dict().items() if k not in _DIGEST_EXCLUDE}
        d["provider"] = {k: v for k, v in d["provider"].items() if k != "api_key"}
        d["dataset"] = self._dataset_digest()
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self) -> "Plan":
        """Check everything a run needs up front and return the work plan."""
        try:
            items = self.load_items()
            registry = self.registry()
            catalog = self.scale_catalog()
        except ConfigError:
            raise
        except SurprobeError as exc:
            raise ConfigError(f"{type(exc).__name__}: {exc}") from None
        if not items:
            raise ConfigError("dataset has no items")
        scales: dict[str, ScaleSpec] = {}
        for sid in self.grid.scales:
            try:
                scales[sid] = get_scale(sid, catalog)
            except SurprobeError as exc:
                raise ConfigError(str(exc)) from None
        for task in sorted({it.task for it in items}):
            for framing in self.grid.framings:
                try:
                    template = registry.get(task, framing)
                    for sid in self.grid.scales:
                        template.body_for(scales[sid])
                except SurprobeError as exc:
                    raise ConfigError(f"{task}: {exc}") from None
        if self.provider.kind == "completions" and not (self.provider.endpoint or os.environ.get(ENV_ENDPOINT)):
            raise ConfigError(f"completions provider needs an endpoint (config or {ENV_ENDPOINT})")
        if self.provider.mock_table:
            table = self.resolve(self.provider.mock_table)
            if not table.exists():
                raise ConfigError(f"mock table {str(table)!r} not found")
        return Plan(self, items, self.grid.cells(), scales, registry)


@dataclass
class Plan:
    config: ExperimentConfig
    items: list[TaskItem]
    cells: list[FactorCell]
    scales: dict[str, ScaleSpec]
    registry: TemplateRegistry

    def __len__(self) -> int:
        return len(self.items) * len(self.cells)

    def keys(self) -> Iterable[tuple[TaskItem, FactorCell]]:
        for item in self.items:
            for cell in self.cells:
                yield item, cell

    def order(self) -> dict[tuple[str, str], int]:
        return {(it.item_id, c.key()): i for i, (it, c) in enumerate(self.keys())}


@dataclass(frozen=True)
class RunSummary:
    records_written: int
    cache_hits: int
    failures: int
    total: int = 0
    failure_classes: Mapping[str, int] = field(default_factory=dict)
    output: str = ""

    @property
    def ok(self) -> bool:
        return self.failures == 0


def make_backend(config: ExperimentConfig):
    p = config.provider
    if p.kind == "mock":
        table = MockTable.load(config.resolve(p.mock_table)) if p.mock_table else None
        backend = MockBackend(table, config.seed)
    else:
        backend = CompletionsBackend(
            p.endpoint or os.environ[ENV_ENDPOINT],
            p.api_key or os.environ.get(ENV_API_KEY),
            top_k=p.top_k, echo_fallback=p.echo_fallback, max_attempts=p.max_attempts,
            backoff=p.backoff, timeout=p.timeout, max_in_flight=config.concurrency,
        )
    cache = config.cache_path
    return CachedBackend(backend, ScoreCache(cache)) if cache else backend


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _base(config: ExperimentConfig, item: TaskItem, cell: FactorCell) -> dict:
    return {
        "run_id": config.run_id,
        "item_id": item.item_id,
        "task": item.task,
        "cell": cell.as_dict(),
        "model": cell.model,
        "scale": cell.scale,
    }


def check_record(rec: Mapping) -> None:
    """Re-assert the surprisal invariants on a finished record."""
    s, probs = rec["surprisals"], rec["probs"]
    n = len(rec["positions"])
    if not (len(s) == len(probs) == len(rec["raw_logprobs"]) == n):
        raise NonFiniteSurprisal("record arrays have different lengths")
    if any(not math.isfinite(v) or v < 0 for v in s):
        raise NonFiniteSurprisal(f"surprisals out of range: {s}")
    if abs(math.fsum(probs) - 1.0) > 1e-9:
        raise NonFiniteSurprisal(f"restricted probabilities sum to {math.fsum(probs)!r}")
    if not 0.0 <= rec["entropy"] <= math.log(n) + 1e-12:
        raise NonFiniteSurprisal(f"entropy {rec['entropy']} outside [0, ln {n}]")
    if rec["argmin"] not in rec["argmin_ties"] or s[rec["positions"].index(rec["argmin"])] != min(s):
        raise NonFiniteSurprisal("argmin does not sit at the curve minimum")


def evaluate(plan: Plan, item: TaskItem, cell: FactorCell, backend) -> dict:
    """Score one (item, cell); returns a result record or a failure record."""
    config = plan.config
    started = _now()
    rec = _base(config, item, cell)
    rec["started_at"] = started
    try:
        scale = plan.scales[cell.scale]
        template = plan.registry.get(item.task, cell.framing)
        prompt = render(template.id, item, cell, scale, plan.registry)
        positions = sorted(scale.positions)
        surfaces = tuple(completion_form(scale, p).surface for p in positions)
        scored = backend.score(ScoreRequest(cell.model, prompt.context_text, surfaces, item.item_id))
        curve = build_curve(scored, scale)
        shape = analyze(curve)
        verdict = curve.binary_verdict() if scale.is_binary else None
        by_surface = {e.surface: e for e in scored.entries}
        rec.update({
            "kind": "result",
            "template": template.id,
            "prompt_sha256": hashlib.sha256(prompt.context_text.encode("utf-8")).hexdigest(),
            "positions": list(curve.positions),
            "surfaces": list(surfaces),
            "raw_logprobs": list(curve.raw_logprobs),
            "resolutions": [by_surface[s].resolution for s in surfaces],
            "surprisals": list(curve.surprisals),
            "probs": list(curve.distribution.probs),
            "entropy": curve.entropy,
            "argmin": curve.argmin_position,
            "argmin_ties": list(curve.argmin_ties),
            "binary": None if verdict is None else {"class": verdict.cls, "delta": verdict.delta},
            "shape": shape.to_dict(),
            "confidence": classify_confidence(shape),
            "gold": item.gold(template.framing),
            "midpoint": None if scale.midpoint is None else str(scale.midpoint),
            "scale_range": [scale.low, scale.high],
            "provider": scored.provider,
            "latency_ms": scored.latency_ms,
        })
        check_record(rec)
    except Exception as exc:  # per-item failures are data, not crashes
        log.warning("item %s cell %s failed: %s: %s", item.item_id, cell.key(), type(exc).__name__, exc)
        rec = _base(config, item, cell)
        rec["started_at"] = started
        rec.update({"kind": "failure", "error": type(exc).__name__, "message": str(exc)})
    rec["finished_at"] = _now()
    return rec


def record_key(rec: Mapping) -> tuple[str, str]:
    return rec["item_id"], FactorCell(**rec["cell"]).key()


def canonicalize(rec: Mapping) -> dict:
    return {k: v for k, v in rec.items() if k not in _VOLATILE}


def _dumps(rec: Mapping) -> str:
    return json.dumps(rec, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def _header(config: ExperimentConfig, plan: Plan) -> dict:
    h = {
        "schema": SCHEMA,
        "kind": "header",
        "run_id": config.run_id,
        "config_digest": config.digest(),
        "expected_records": len(plan),
        "created_at": _now(),
    }
    return canonicalize(h) if config.canonical else h


def read_output(path: str | Path) -> tuple[dict | None, list[dict]]:
    """Header and records of a results file. A torn final line (from an
    interrupted writer) is dropped; other bad lines raise."""
    path = Path(path)
    if not path.exists():
        return None, []
    lines = path.read_text(encoding="utf-8").split("\n")
    header, records = None, []
    for n, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError:
            if all(not rest.strip() for rest in lines[n + 1:]):
                log.warning("dropping torn last line of %s", path)
                break
            raise ConfigError(f"{path}:{n + 1} is not valid JSON") from None
        if obj.get("kind") == "header":
            if obj.get("schema") != SCHEMA:
                raise ConfigError(f"{path} has schema {obj.get('schema')!r}, expected {SCHEMA!r}")
            header = obj
        else:
            records.append(obj)
    return header, records


def _write_sorted(path: Path, header: dict, records: Iterable[dict], plan: Plan, canonical: bool) -> None:
    order = plan.order()
    latest: dict[tuple[str, str], dict] = {}
    for rec in records:
        key = record_key(rec)
        if key not in order:
            continue
        # a success is never replaced by a later failure of the same tuple
        if key in latest and latest[key]["kind"] == "result" and rec["kind"] != "result":
            continue
        latest[key] = rec
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps(header) + "\n")
        for key in sorted(latest, key=order.__getitem__):
            rec = canonicalize(latest[key]) if canonical else latest[key]
            fh.write(_dumps(rec) + "\n")
    os.replace(tmp, path)


def _execute(plan: Plan, todo: list[tuple[TaskItem, FactorCell]], backend, fh) -> tuple[int, dict[str, int]]:
    written, failures = 0, {}
    canonical = plan.config.canonical
    with ThreadPoolExecutor(max_workers=plan.config.concurrency) as pool:
        futures = [pool.submit(evaluate, plan, item, cell, backend) for item, cell in todo]
        try:
            for fut in as_completed(futures):
                rec = fut.result()
                # single writer: only this thread touches the output file
                fh.write(_dumps(canonicalize(rec) if canonical else rec) + "\n")
                fh.flush()
                if rec["kind"] == "failure":
                    failures[rec["error"]] = failures.get(rec["error"], 0) + 1
                else:
                    written += 1
        except BaseException:
            for f in futures:
                f.cancel()
            raise
    return written, failures


def _hits(backend) -> int:
    return getattr(backend, "hits", 0)


def run(config: ExperimentConfig, *, backend=None, _resume: bool = False) -> RunSummary:
    plan = config.validate()
    out = config.output_path
    out.parent.mkdir(parents=True, exist_ok=True)
    done: list[dict] = []
    old: list[dict] = []
    header = _header(config, plan)
    if _resume:
        old_header, old = read_output(out)
        if old_header is not None:
            if old_header.get("run_id") != config.run_id or old_header.get("config_digest") != config.digest():
                raise ConfigDigestMismatch(
                    f"{out} was produced by run {old_header.get('run_id')!r} with digest "
                    f"{str(old_header.get('config_digest'))[:12]}..., current config digest is {config.digest()[:12]}..."
                )
            header = old_header
        done = [r for r in old if r.get("kind") == "result" and r.get("run_id") == config.run_id]
    finished = {record_key(r) for r in done}
    todo = [(it, c) for it, c in plan.keys() if (it.item_id, c.key()) not in finished]

    owns_backend = backend is None
    backend = backend or make_backend(config)
    hits0 = _hits(backend)
    t0 = time.perf_counter()
    try:
        if _resume and out.exists():
            # rewrite what survived so a torn tail never ends up mid-file
            _write_sorted(out, header, old, plan, config.canonical)
        else:
            out.write_text(_dumps(header) + "\n", encoding="utf-8")
        with open(out, "a", encoding="utf-8", newline="\n") as fh:
            written, failures = _execute(plan, todo, backend, fh)
    finally:
        if owns_backend and hasattr(getattr(backend, "backend", backend), "close"):
            getattr(backend, "backend", backend).close()
    _, records = read_output(out)
    _write_sorted(out, header, records, plan, config.canonical)
    log.info("run %s: %d records, %d failures in %.2fs", config.run_id, written, sum(failures.values()),
             time.perf_counter() - t0)
    return RunSummary(written, _hits(backend) - hits0, sum(failures.values()), len(plan), failures, str(out))


def resume(config: ExperimentConfig, *, backend=None) -> RunSummary:
    """Execute only tuples without a successful record; failed ones are retried."""
    return run(config, backend=backend, _resume=True)
