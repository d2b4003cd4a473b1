"""Table (CSV) and curve plot-data emitters over result records."""

from __future__ import annotations

import csv
import fnmatch
import io
import json
import re
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import NoMatch, UnknownFactor
from .metrics import FACTORS, LabeledOutcome, Table, aggregate, render_value
from .runner import read_output
from .shape import CurveShape

CURVES_SCHEMA = "surprobe.curves/1"


def load_records(path: str | Path) -> list[dict]:
    """Successful result records of a results file (failures skipped)."""
    _, records = read_output(path)
    return [r for r in records if r.get("kind") == "result"]


def to_outcome(rec: Mapping) -> LabeledOutcome:
    binary = rec.get("binary")
    return LabeledOutcome(
        item_id=rec["item_id"],
        task=rec["task"],
        cell=dict(rec["cell"]),
        argmin_position=rec["argmin"],
        gold=dict(rec.get("gold") or {}),
        entropy=rec.get("entropy", 0.0),
        binary_class=binary["class"] if binary else None,
        midpoint=Fraction(rec["midpoint"]) if rec.get("midpoint") is not None else None,
        scale_range=tuple(rec["scale_range"]) if rec.get("scale_range") else None,
        shape=CurveShape.from_dict(rec["shape"]) if rec.get("shape") else None,
    )


@dataclass(frozen=True)
class TableSpec:
    metric: str
    group_by: tuple[str, ...]
    pivot: int | None = None
    average_over: str | None = None
    name: str | None = None

    @property
    def filename(self) -> str:
        return self.name or "_".join((self.metric, *self.group_by))


def _render_rows(table: Table, full: bool) -> list[list[str]]:
    def fmt(v: float | None) -> str:
        if v is None:
            return ""
        return repr(float(v)) if full else render_value(v, table.precision)

    pivoted = table.columns != ("value",)
    header = list(table.row_factors) + (list(table.columns) + ["mean"] if pivoted else [table.metric]) + ["n"]
    rows = [header]
    for r in table.rows:
        cells = [fmt(r.values.get(c)) for c in table.columns]
        if pivoted:
            cells.append(fmt(r.mean))
        rows.append(list(r.key) + cells + [str(r.n)])
    return rows


def table_csv(table: Table, full_precision: bool = False) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerows(_render_rows(table, full_precision))
    return buf.getvalue()


def build_table(records: Sequence[Mapping], spec: TableSpec) -> Table:
    return aggregate([to_outcome(r) for r in records], spec.group_by, spec.metric,
                     pivot=spec.pivot, average_over=spec.average_over)


def emit_tables(records: Sequence[Mapping], specs: Iterable[TableSpec], out_dir: str | Path,
                full_precision: bool = False) -> list[Path]:
    """One ``<name>.csv`` per spec, plus ``<name>.full.csv`` at full
    precision when asked. Output bytes depend only on the records."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for spec in specs:
        table = build_table(records, spec)
        path = out_dir / f"{spec.filename}.csv"
        path.write_bytes(table_csv(table).encode("utf-8"))
        written.append(path)
        if full_precision:
            full = out_dir / f"{spec.filename}.full.csv"
            full.write_bytes(table_csv(table, True).encode("utf-8"))
            written.append(full)
    return written


# -- curves ----------------------------------------------------------------------

def _value(rec: Mapping, factor: str) -> str:
    if factor == "item":
        return rec["item_id"]
    if factor == "task":
        return rec["task"]
    if factor in ("dimension", "category"):
        return str((rec.get("gold") or {}).get(factor, ""))
    return str(rec["cell"][factor])


def select(records: Iterable[Mapping], filt: Mapping[str, str] | None) -> list[Mapping]:
    """Records whose factors match every glob in ``filt``."""
    filt = dict(filt or {})
    bad = [k for k in filt if k not in FACTORS]
    if bad:
        raise UnknownFactor(f"unknown filter factor(s) {bad}; known: {', '.join(FACTORS)}")
    return [r for r in records if all(fnmatch.fnmatchcase(_value(r, k), v) for k, v in filt.items())]


def curve_series(rec: Mapping) -> dict:
    return {
        "cell": dict(rec["cell"]),
        "model": rec["model"],
        "scale": rec["scale"],
        "framing": rec["cell"]["framing"],
        "columns": ["position", "surprisal"],
        "points": [[p, s] for p, s in zip(rec["positions"], rec["surprisals"])],
        "labels": [s.strip() for s in rec["surfaces"]],
        "entropy": rec["entropy"],
        "argmin": rec["argmin"],
        "argmin_ties": rec["argmin_ties"],
        "gold": rec.get("gold"),
    }


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name)


def curve_documents(records: Sequence[Mapping], filt: Mapping[str, str] | None = None) -> dict[str, dict]:
    chosen = select(records, filt)
    if not chosen:
        raise NoMatch(f"no result records match {dict(filt or {})}")
    by_item: dict[str, list[Mapping]] = defaultdict(list)
    for r in chosen:
        by_item[r["item_id"]].append(r)
    docs = {}
    for item_id in sorted(by_item):
        recs = sorted(by_item[item_id], key=lambda r: (r["model"], json.dumps(r["cell"], sort_keys=True)))
        docs[item_id] = {
            "schema": CURVES_SCHEMA,
            "item_id": item_id,
            "task": recs[0]["task"],
            "series": [curve_series(r) for r in recs],
        }
    return docs


def emit_curves(records: Sequence[Mapping], filt: Mapping[str, str] | None, out_dir: str | Path) -> list[Path]:
    """One ``<item_id>.curves.json`` per matching item."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for item_id, doc in curve_documents(records, filt).items():
        path = out_dir / f"{_safe(item_id)}.curves.json"
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        paths.append(path)
    return paths
