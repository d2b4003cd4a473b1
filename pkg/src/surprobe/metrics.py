"""Classification and scoring metrics over evaluated outcomes.

Rates are percentages in [0, 100] kept at full precision; rendering to one
decimal happens only in tables.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import EmptyGroup, IncompletePair, MidpointUndefined, ScaleMismatch, UnknownFactor
from .shape import CurveShape

CELL_FACTORS = ("context", "persona", "delimiter", "framing", "scale", "model")
FACTORS = CELL_FACTORS + ("task", "dimension", "category", "item")

POSITIVE_KEYS = ("causal", "figurative", "applicable")


@dataclass(frozen=True)
class LabeledOutcome:
    item_id: str
    task: str
    cell: Mapping[str, str]
    argmin_position: int
    gold: Mapping[str, object]
    entropy: float = 0.0
    binary_class: str | None = None
    midpoint: Fraction | None = None
    scale_range: tuple[int, int] | None = None
    shape: CurveShape | None = None

    __hash__ = None

    @property
    def model(self) -> str:
        return self.cell["model"]

    @property
    def scale_id(self) -> str:
        return self.cell["scale"]

    def factor(self, name: str) -> str:
        if name in CELL_FACTORS:
            return str(self.cell[name])
        if name == "task":
            return self.task
        if name == "item":
            return self.item_id
        if name in ("dimension", "category"):
            return str(self.gold.get(name, ""))
        raise UnknownFactor(f"unknown factor {name!r}; known: {FACTORS}")

    def gold_positive(self) -> bool:
        for k in POSITIVE_KEYS:
            if k in self.gold:
                return bool(self.gold[k])
        raise ValueError(f"outcome {self.item_id!r} has no boolean gold label")


def _require(outcomes: Sequence) -> None:
    if not outcomes:
        raise EmptyGroup("no outcomes in group")


def _pct(num: int, den: int) -> float:
    return 100.0 * num / den


def mae(outcomes: Sequence[LabeledOutcome]) -> float:
    _require(outcomes)
    scales = {o.scale_id for o in outcomes}
    if len(scales) > 1:
        raise ScaleMismatch(f"MAE over mixed scales {sorted(scales)}")
    errs = []
    for o in outcomes:
        exp = o.gold.get("expected")
        if not isinstance(exp, int):
            raise ValueError(f"outcome {o.item_id!r} has no integer expected score")
        errs.append(abs(o.argmin_position - exp))
    return sum(errs) / len(errs)


def mae_by_dimension(outcomes: Sequence[LabeledOutcome]) -> dict[str, float]:
    """Per-dimension MAE plus ``"mean"``, the unweighted mean of dimensions."""
    _require(outcomes)
    groups: dict[str, list] = defaultdict(list)
    for o in outcomes:
        groups[o.factor("dimension")].append(o)
    out = {dim: mae(g) for dim, g in sorted(groups.items())}
    out["mean"] = sum(out.values()) / len(out)
    return out


def binary_accuracy(outcomes: Sequence[LabeledOutcome]) -> float:
    _require(outcomes)
    correct = 0
    for o in outcomes:
        if o.binary_class is None:
            raise ValueError(f"outcome {o.item_id!r} carries no binary verdict")
        correct += (o.binary_class == "positive") == o.gold_positive()
    return _pct(correct, len(outcomes))


def _midpoint(o: LabeledOutcome, midpoint) -> Fraction:
    mid = midpoint if midpoint is not None else o.midpoint
    if mid is None:
        raise MidpointUndefined(f"no midpoint for scale {o.scale_id!r}")
    return Fraction(mid)


def directional_accuracy(outcomes: Sequence[LabeledOutcome], midpoint=None) -> float:
    """Share of items whose argmin lies on the gold side of the midpoint.
    An argmin exactly on the midpoint is wrong for either label."""
    _require(outcomes)
    correct = 0
    for o in outcomes:
        mid = _midpoint(o, midpoint)
        if o.gold_positive():
            correct += o.argmin_position > mid
        else:
            correct += o.argmin_position < mid
    return _pct(correct, len(outcomes))


def midpoint_ties(outcomes: Iterable[LabeledOutcome], midpoint=None) -> int:
    return sum(o.argmin_position == _midpoint(o, midpoint) for o in outcomes)


def _pair_key(o: LabeledOutcome) -> tuple:
    return (o.gold.get("pair_id"),) + tuple(o.cell[f] for f in CELL_FACTORS)


def paired_discrimination(outcomes: Sequence[LabeledOutcome]) -> float:
    """Share of figurative/literal pairs where the figurative member's
    argmin position is strictly higher."""
    _require(outcomes)
    pairs: dict[tuple, list[LabeledOutcome]] = defaultdict(list)
    for o in outcomes:
        if o.gold.get("pair_id") is None:
            raise IncompletePair(f"outcome {o.item_id!r} has no pair_id")
        pairs[_pair_key(o)].append(o)
    hits = 0
    for key, members in pairs.items():
        fig = [m for m in members if m.gold.get("figurative")]
        lit = [m for m in members if not m.gold.get("figurative")]
        if len(fig) != 1 or len(lit) != 1:
            raise IncompletePair(f"pair {key[0]!r} in cell {key[1:]} has {len(fig)} figurative / {len(lit)} literal")
        hits += fig[0].argmin_position > lit[0].argmin_position
    return _pct(hits, len(pairs))


@dataclass(frozen=True)
class PRF:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    # precision or recall undefined; reported as 0
    degenerate: bool = False


def thresholded_prf(outcomes: Sequence[LabeledOutcome], threshold: int = 3) -> PRF:
    _require(outcomes)
    tp = fp = fn = tn = 0
    for o in outcomes:
        # binary-scale records carry their own verdict; ordinal ones are thresholded
        pred = o.binary_class == "positive" if o.binary_class is not None else o.argmin_position >= threshold
        gold = o.gold_positive()
        if pred and gold:
            tp += 1
        elif pred:
            fp += 1
        elif gold:
            fn += 1
        else:
            tn += 1
    n = tp + fp + fn + tn
    degenerate = tp + fp == 0 or tp + fn == 0
    precision = _pct(tp, tp + fp) if tp + fp else 0.0
    recall = _pct(tp, tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(_pct(tp + tn, n), precision, recall, f1, tp, fp, fn, tn, degenerate)


# -- tables ----------------------------------------------------------------------

@dataclass(frozen=True)
class MetricDef:
    id: str
    fn: Callable[[Sequence[LabeledOutcome]], float]
    precision: int = 1


METRICS: dict[str, MetricDef] = {
    m.id: m
    for m in (
        MetricDef("mae", mae, 2),
        MetricDef("binary-accuracy", binary_accuracy),
        MetricDef("directional-accuracy", directional_accuracy),
        MetricDef("paired-discrimination", paired_discrimination),
        MetricDef("thresholded-accuracy", lambda o: thresholded_prf(o).accuracy),
        MetricDef("precision", lambda o: thresholded_prf(o).precision),
        MetricDef("recall", lambda o: thresholded_prf(o).recall),
        MetricDef("f1", lambda o: thresholded_prf(o).f1),
    )
}


def render_value(value: float, digits: int) -> str:
    """Round half away from zero, as printed tables do (66.25 -> "66.3")."""
    q = Decimal(1).scaleb(-digits)
    return str(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


@dataclass
class TableRow:
    key: tuple[str, ...]
    values: dict[str, float]
    counts: dict[str, int]
    mean: float | None

    @property
    def n(self) -> int:
        return sum(self.counts.values())


@dataclass
class Table:
    metric: str
    group_by: tuple[str, ...]
    row_factors: tuple[str, ...]
    columns: tuple[str, ...]
    rows: list[TableRow]
    precision: int = 1
    notes: dict[str, object] = field(default_factory=dict)

    def cell(self, key: Sequence[str], column: str = "value") -> float:
        for r in self.rows:
            if r.key == tuple(key):
                return r.values[column]
        raise KeyError(tuple(key))


def _check_factors(names: Iterable[str]) -> None:
    for f in names:
        if f not in FACTORS:
            raise UnknownFactor(f"unknown factor {f!r}; known: {', '.join(FACTORS)}")


def group(outcomes: Iterable[LabeledOutcome], by: Sequence[str]) -> dict[tuple[str, ...], list[LabeledOutcome]]:
    _check_factors(by)
    out: dict[tuple[str, ...], list[LabeledOutcome]] = defaultdict(list)
    for o in outcomes:
        out[tuple(o.factor(f) for f in by)].append(o)
    return dict(out)


def aggregate(
    outcomes: Sequence[LabeledOutcome],
    group_by: Sequence[str],
    metric: str | MetricDef,
    *,
    pivot: int | None = None,
    average_over: str | None = None,
) -> Table:
    """Group outcomes and lay the metric out as a results table.

    The last ``pivot`` grouping factors (default 1 when grouping by two or
    more) become columns, joined with "/" when more than one; a ``mean``
    column holds the unweighted mean over a row's columns. With
    ``average_over`` the metric is computed per level of that factor inside
    each group and then averaged (e.g. accuracy averaged over response
    formats).
    """
    mdef = METRICS[metric] if isinstance(metric, str) else metric
    group_by = tuple(group_by)
    _check_factors(group_by + ((average_over,) if average_over else ()))
    _require(outcomes)
    if pivot is None:
        pivot = 1 if len(group_by) >= 2 else 0
    if not 0 <= pivot <= len(group_by):
        raise ValueError(f"pivot {pivot} out of range for {len(group_by)} grouping factors")
    row_factors = group_by[: len(group_by) - pivot]

    def value(members: Sequence[LabeledOutcome]) -> float:
        if average_over is None:
            return mdef.fn(members)
        subs = group(members, [average_over])
        return sum(mdef.fn(g) for _, g in sorted(subs.items())) / len(subs)

    groups = group(outcomes, group_by)
    rows: dict[tuple[str, ...], TableRow] = {}
    columns: set[str] = set()
    for key in sorted(groups):
        members = groups[key]
        rkey = key[: len(row_factors)]
        col = "/".join(key[len(row_factors):]) if pivot else "value"
        columns.add(col)
        row = rows.setdefault(rkey, TableRow(rkey, {}, {}, None))
        row.values[col] = value(members)
        row.counts[col] = len(members)
    for row in rows.values():
        row.mean = sum(row.values.values()) / len(row.values) if pivot else None

    notes: dict[str, object] = {}
    if mdef.id == "directional-accuracy":
        ties = midpoint_ties(outcomes)
        if ties:
            notes["midpoint_ties"] = ties
    if mdef.id in ("thresholded-accuracy", "precision", "recall", "f1"):
        degenerate = [list(k) for k, g in sorted(groups.items()) if thresholded_prf(g).degenerate]
        if degenerate:
            notes["degenerate_groups"] = degenerate
    return Table(mdef.id, group_by, row_factors, tuple(sorted(columns)), [rows[k] for k in sorted(rows)],
                 mdef.precision, notes)
