import json
import random
from fractions import Fraction

import oracles
import pytest
from conftest import FIXTURES
from hypothesis import given
from hypothesis import strategies as st

from surprobe.errors import EmptyGroup, IncompletePair, MidpointUndefined, ScaleMismatch, UnknownFactor
from surprobe.metrics import (
    LabeledOutcome,
    aggregate,
    binary_accuracy,
    directional_accuracy,
    mae,
    mae_by_dimension,
    midpoint_ties,
    paired_discrimination,
    render_value,
    thresholded_prf,
)


def cell(**kw):
    base = {"context": "none", "persona": "none", "delimiter": "none", "framing": "f", "scale": "1-5", "model": "m"}
    base.update(kw)
    return base


def ordinal(i, argmin, gold, mid=Fraction(3), task="causal-ordinal", **kw):
    return LabeledOutcome(f"i{i}", task, cell(**kw), argmin, gold, midpoint=mid)


def binary(i, predicted_positive, causal, **kw):
    return LabeledOutcome(f"b{i}", "causal-binary", cell(**{"scale": "true-false", **kw}), int(predicted_positive),
                          {"causal": causal}, binary_class="positive" if predicted_positive else "negative")


def pair(k, fig_min, lit_min, **kw):
    return [
        LabeledOutcome(f"p{k}-fig", "figurative", cell(**kw), fig_min, {"figurative": True, "pair_id": f"p{k}"}),
        LabeledOutcome(f"p{k}-lit", "figurative", cell(**kw), lit_min, {"figurative": False, "pair_id": f"p{k}"}),
    ]


def sets(i, pred, expected, dim="ecological", **kw):
    return LabeledOutcome(f"s{i}", "sets", cell(scale="1-9", framing=dim, **kw), pred,
                          {"expected": expected, "dimension": dim}, midpoint=Fraction(5))


# -- MAE -------------------------------------------------------------------------

def test_mae_examples():
    assert mae([sets(0, 7, 8), sets(1, 1, 1)]) == 0.5
    assert mae([sets(0, 4, 4), sets(1, 9, 9)]) == 0.0


def test_mae_fixture_group():
    fx = json.loads((FIXTURES / "mae_group.json").read_text())
    outs = [sets(i, p, e, fx["dimension"], model=fx["model"]) for i, (p, e) in
            enumerate(zip(fx["predicted"], fx["expected"]))]
    assert mae(outs) == pytest.approx(1.45, abs=1e-12)
    assert render_value(mae(outs), 2) == "1.45"


def test_mae_errors():
    with pytest.raises(EmptyGroup):
        mae([])
    with pytest.raises(ScaleMismatch):
        mae([sets(0, 1, 1), LabeledOutcome("x", "sets", cell(scale="1-5"), 1, {"expected": 1})])


def test_mae_by_dimension_mean_of_dimensions():
    outs = [sets(0, 7, 8, "ecological"), sets(1, 1, 1, "ecological"), sets(2, 3, 6, "social")]
    out = mae_by_dimension(outs)
    assert out == {"ecological": 0.5, "social": 3.0, "mean": 1.75}


# -- binary ----------------------------------------------------------------------

def test_binary_accuracy_examples():
    outs = [binary(i, i < 8, True) for i in range(10)]
    assert binary_accuracy(outs) == 80.0
    assert binary_accuracy([binary(0, True, True), binary(1, False, False)]) == 100.0
    assert binary_accuracy([binary(0, False, True), binary(1, True, False)]) == 0.0
    with pytest.raises(EmptyGroup):
        binary_accuracy([])


# -- directional -----------------------------------------------------------------

def test_directional_examples():
    assert directional_accuracy([ordinal(0, 4, {"causal": True})]) == 100.0
    assert directional_accuracy([ordinal(0, 3, {"causal": True})]) == 0.0
    assert directional_accuracy([ordinal(0, 3, {"causal": False})]) == 0.0
    outs = [ordinal(0, 4, {"causal": True}), ordinal(1, 1, {"causal": False}),
            ordinal(2, 5, {"causal": True}), ordinal(3, 2, {"causal": True})]
    assert directional_accuracy(outs) == 75.0


def test_directional_needs_midpoint():
    with pytest.raises(MidpointUndefined):
        directional_accuracy([ordinal(0, 4, {"causal": True}, mid=None)])
    assert directional_accuracy([ordinal(0, 4, {"causal": True}, mid=None)], midpoint=3) == 100.0


def test_midpoint_ties_flagged_in_table_notes():
    outs = [ordinal(0, 3, {"causal": True}), ordinal(1, 4, {"causal": True})]
    assert midpoint_ties(outs) == 1
    assert aggregate(outs, ["model"], "directional-accuracy").notes == {"midpoint_ties": 1}


# -- paired ----------------------------------------------------------------------

def test_paired_examples():
    assert paired_discrimination(pair(0, 5, 2)) == 100.0
    assert paired_discrimination(pair(0, 3, 3)) == 0.0
    outs = [o for k in range(30) for o in pair(k, 4 if k != 17 else 2, 2)]
    assert render_value(paired_discrimination(outs), 1) == "96.7"


def test_paired_keeps_cells_apart():
    outs = pair(0, 5, 2, context="full") + pair(0, 1, 2, context="none")
    assert paired_discrimination(outs) == 50.0


def test_incomplete_pair():
    with pytest.raises(IncompletePair):
        paired_discrimination(pair(0, 5, 2)[:1])
    with pytest.raises(IncompletePair):
        paired_discrimination(pair(0, 5, 2) + pair(0, 5, 2)[:1])


# -- thresholded -----------------------------------------------------------------

def _confusion(tp, fp, fn, tn):
    outs = []
    for n, (argmin, gold) in zip((tp, fp, fn, tn), ((4, True), (4, False), (2, True), (2, False))):
        outs += [LabeledOutcome(f"c{len(outs) + i}", "coding", cell(), argmin, {"applicable": gold})
                 for i in range(n)]
    return outs


def test_prf_example():
    r = thresholded_prf(_confusion(3, 1, 2, 4))
    assert (r.accuracy, r.precision, r.recall) == (70.0, 75.0, 60.0)
    assert render_value(r.f1, 1) == "66.7" and not r.degenerate


def test_prf_degenerate():
    r = thresholded_prf(_confusion(0, 0, 0, 5))
    assert r.f1 == 0.0 and r.accuracy == 100.0 and r.degenerate
    assert aggregate(_confusion(0, 0, 0, 5), ["model"], "f1").notes["degenerate_groups"] == [["m"]]


def test_threshold_boundary():
    assert thresholded_prf([LabeledOutcome("x", "coding", cell(), 3, {"applicable": True})]).tp == 1


# -- rendering -------------------------------------------------------------------

@pytest.mark.parametrize("v, d, s", [(66.25, 1, "66.3"), (80.0, 1, "80.0"), (0.0, 1, "0.0"), (100, 1, "100.0"),
                                     (1.445, 2, "1.45"), (96.66666666666667, 1, "96.7"), (1.0, 2, "1.00")])
def test_render_value_half_up(v, d, s):
    assert render_value(v, d) == s


# -- aggregate -------------------------------------------------------------------

def _table3_outcomes():
    outs = []
    for model, ctx, scale, hits in [("a", "full", "true-false", 4), ("a", "full", "yes-no", 2),
                                    ("a", "none", "true-false", 1), ("a", "none", "yes-no", 3),
                                    ("b", "full", "true-false", 4), ("b", "full", "yes-no", 4)]:
        outs += [binary(f"{model}{ctx}{scale}{i}", i < hits, True, model=model, context=ctx, scale=scale)
                 for i in range(4)]
    return outs


def test_table3_shape():
    t = aggregate(_table3_outcomes(), ["model", "context"], "binary-accuracy", average_over="scale")
    assert t.row_factors == ("model",) and t.columns == ("full", "none")
    a, b = t.rows
    assert a.key == ("a",) and a.values == {"full": 75.0, "none": 50.0} and a.mean == 62.5
    assert b.values == {"full": 100.0} and b.mean == 100.0 and b.n == 8


def test_table4_shape_columns_are_framings():
    outs = [ordinal(i, 4, {"causal": True}, model="m", context=c, framing=f)
            for i, (c, f) in enumerate([(c, f) for c in ("full", "none") for f in ("bc", "cs")])]
    t = aggregate(outs, ["model", "context", "framing"], "directional-accuracy")
    assert t.row_factors == ("model", "context") and t.columns == ("bc", "cs")
    assert [r.key for r in t.rows] == [("m", "full"), ("m", "none")]


def test_singleton_grouping_equals_ungrouped():
    outs = _table3_outcomes()
    t = aggregate(outs, ["task"], "binary-accuracy")
    assert len(t.rows) == 1 and t.rows[0].values["value"] == binary_accuracy(outs)
    t0 = aggregate(outs, [], "binary-accuracy")
    assert t0.rows[0].values["value"] == binary_accuracy(outs)


def test_unknown_factor():
    with pytest.raises(UnknownFactor):
        aggregate(_table3_outcomes(), ["model", "colour"], "binary-accuracy")


def test_empty_aggregate():
    with pytest.raises(EmptyGroup):
        aggregate([], ["model"], "binary-accuracy")


def test_sets_table2_shape():
    outs = [sets(i, 5, 5 + (i % 3), dim, model=m) for i in range(6) for dim in ("social", "ecological")
            for m in ("7b", "14b")]
    t = aggregate(outs, ["model", "dimension"], "mae")
    assert t.columns == ("ecological", "social") and t.precision == 2
    for r in t.rows:
        assert r.mean == pytest.approx(sum(r.values.values()) / 2)


# -- oracle / properties ---------------------------------------------------------

def _outcome_set(seed, n):
    rng = random.Random(seed)
    argmins, expected, golds, preds, pairs = oracles.random_outcome_set(rng, n)
    ordinal_outs = [ordinal(i, a, {"causal": g, "applicable": g, "expected": e})
                    for i, (a, e, g) in enumerate(zip(argmins, expected, golds))]
    binary_outs = [binary(i, p, g) for i, (p, g) in enumerate(zip(preds, golds))]
    pair_outs = [o for k, (f, l) in enumerate(pairs) for o in pair(k, f, l)]
    return (argmins, expected, golds, preds, pairs), ordinal_outs, binary_outs, pair_outs


def r10(x):
    return round(x, 10)


@given(st.integers(0, 2**32), st.integers(1, 50))
def test_metrics_match_oracles(seed, n):
    (argmins, expected, golds, preds, pairs), o, b, p = _outcome_set(seed, n)
    assert r10(mae(o)) == r10(oracles.mae(argmins, expected))
    assert r10(binary_accuracy(b)) == r10(oracles.binary_accuracy(preds, golds))
    assert r10(directional_accuracy(o)) == r10(oracles.directional_accuracy(argmins, golds, 3))
    assert r10(paired_discrimination(p)) == r10(oracles.paired_discrimination(pairs))
    r = thresholded_prf(o)
    assert tuple(map(r10, (r.accuracy, r.precision, r.recall, r.f1))) == tuple(
        map(r10, oracles.prf(argmins, golds)))


@given(st.integers(0, 2**32), st.integers(1, 50), st.randoms())
def test_metrics_permutation_invariant_and_bounded(seed, n, rnd):
    _, o, b, p = _outcome_set(seed, n)
    for fn, outs in ((mae, o), (binary_accuracy, b), (directional_accuracy, o), (paired_discrimination, p)):
        shuffled = list(outs)
        rnd.shuffle(shuffled)
        assert r10(fn(outs)) == r10(fn(shuffled))
    r = thresholded_prf(o)
    for v in (binary_accuracy(b), directional_accuracy(o), paired_discrimination(p),
              r.accuracy, r.precision, r.recall, r.f1):
        assert 0.0 <= v <= 100.0
    assert 0.0 <= mae(o) <= 4


@given(st.integers(0, 2**32), st.integers(1, 12))
def test_mean_column_equals_size_weighted_mean_for_equal_groups(seed, per_group):
    rng = random.Random(seed)
    outs = [binary(f"{m}{c}{i}", rng.random() < 0.5, rng.random() < 0.5, model=m, context=c)
            for m in ("a", "b") for c in ("full", "minimal", "none") for i in range(per_group)]
    t = aggregate(outs, ["model", "context"], "binary-accuracy")
    for r in t.rows:
        weighted = sum(r.values[c] * r.counts[c] for c in r.values) / sum(r.counts.values())
        assert r.mean == pytest.approx(weighted, abs=1e-9)


def test_prf_uses_binary_verdict_on_binary_scales():
    o = [binary(0, True, True), binary(1, True, False), binary(2, False, True), binary(3, False, False)]
    r = thresholded_prf(o)
    assert (r.tp, r.fp, r.fn, r.tn) == (1, 1, 1, 1) and r.precision == 50.0
