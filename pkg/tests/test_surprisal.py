import math

import numpy as np
import oracles
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surprobe.backend import ScoredAlternatives, ScoredSurface
from surprobe.errors import ArityMismatch, NonFiniteLogit, NonFiniteSurprisal, NonPositiveProbability
from surprobe.scales import build_scale, get_scale
from surprobe.surprisal import (
    RestrictedDistribution,
    binary_decide,
    build_curve,
    curve_from_logits,
    entropy_of,
    renormalize,
    softmax,
    surprisal_of_prob,
)

finite = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("p, expected", [(1.0, 0.0), (0.5, math.log(2)), (0.001, 6.907755278982137)])
def test_surprisal_of_prob(p, expected):
    assert surprisal_of_prob(p) == pytest.approx(expected, abs=1e-12)
    assert surprisal_of_prob(p) == pytest.approx(oracles.surprisal(p), abs=1e-12)


def test_surprisal_rounded_values():
    assert round(surprisal_of_prob(0.5), 6) == 0.693147
    assert round(surprisal_of_prob(0.001), 6) == 6.907755


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5, float("nan"), float("inf")])
def test_surprisal_rejects_invalid(p):
    with pytest.raises(NonPositiveProbability):
        surprisal_of_prob(p)


def test_softmax_closed_forms():
    assert list(softmax([0, 0])) == [0.5, 0.5]
    p = softmax([math.log(2), 0])
    assert p[0] == pytest.approx(2 / 3, abs=1e-15) and p[1] == pytest.approx(1 / 3, abs=1e-15)


def test_softmax_rejects_non_finite():
    with pytest.raises(NonFiniteLogit):
        softmax([0.0, float("inf")])


def scored(surfaces, logits):
    return ScoredAlternatives(tuple(ScoredSurface(s, x, "mock") for s, x in zip(surfaces, logits)), "mock")


def test_renormalize_arity_and_unknown_surface():
    scale = get_scale("1-5")
    with pytest.raises(ArityMismatch):
        renormalize(scored([" 1", " 2"], [0, 0]), scale)
    with pytest.raises(ArityMismatch):
        renormalize(scored([" 1", " 2", " 3", " 4", " 6"], [0] * 5), scale)


def test_renormalize_rejects_nan():
    with pytest.raises(NonFiniteLogit):
        renormalize(scored([" True", " False"], [float("nan"), 0.0]), get_scale("true-false"))


def test_dominant_logit_curve():
    c = curve_from_logits([-0.1, -5, -5, -5, -5], get_scale("1-5"))
    assert c.argmin_position == 1 and c.argmin_ties == (1,)


def test_uniform_curve():
    c = curve_from_logits([0.0] * 5, get_scale("1-5"))
    assert c.entropy == pytest.approx(math.log(5), abs=1e-12)
    assert round(c.entropy, 6) == 1.609438
    assert c.argmin_position == 1 and c.argmin_ties == (1, 2, 3, 4, 5)


def test_half_quarter_quarter_entropy():
    scale = build_scale("qualitative-ordinal", ["a", "b", "c"])
    c = curve_from_logits([math.log(0.5), math.log(0.25), math.log(0.25)], scale)
    assert c.entropy == pytest.approx(1.5 * math.log(2), abs=1e-12)
    assert round(c.entropy, 6) == 1.039721


@pytest.mark.parametrize("probs, expected", [
    ([1.0, 0.0, 0.0], 0.0),
    ([1 / 9] * 9, math.log(9)),
    ([0.7, 0.2, 0.1], 0.8018185525433373),
])
def test_entropy_of(probs, expected):
    assert entropy_of(probs) == pytest.approx(expected, abs=1e-12)
    assert entropy_of(probs) == pytest.approx(oracles.entropy(probs), abs=1e-12)


def test_entropy_rounded():
    assert round(entropy_of([0.7, 0.2, 0.1]), 6) == 0.801819
    assert round(entropy_of([1 / 9] * 9), 6) == 2.197225


@pytest.mark.parametrize("s_true, s_false, cls, delta", [
    (2.0, 3.0, "positive", 1.0),
    (3.0, 3.0, "negative", 0.0),
    (5.2, 1.1, "negative", 4.1),
])
def test_binary_decide(s_true, s_false, cls, delta):
    v = binary_decide(s_true, s_false)
    assert v.cls == cls and v.delta == pytest.approx(delta, abs=1e-12)


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), -0.5])
def test_binary_decide_rejects(bad):
    with pytest.raises(NonFiniteSurprisal):
        binary_decide(bad, 1.0)


def test_binary_verdict_from_true_false_curve():
    scale = get_scale("true-false")
    c = build_curve(scored([" True", " False"], [-0.2, -2.0]), scale)
    assert c.binary_verdict().cls == "positive"
    assert c.positions == (0, 1)
    with pytest.raises(ArityMismatch):
        curve_from_logits([0] * 5, get_scale("1-5")).binary_verdict()


def test_underflow_is_clamped_not_infinite():
    c = curve_from_logits([0.0, -1e6], get_scale("true-false"))
    assert all(math.isfinite(s) for s in c.surprisals)
    assert c.surprisals[1] == pytest.approx(-math.log(1e-300))


def test_raw_logprobs_kept_for_audit():
    c = curve_from_logits([-1.0, -2.0, -3.0, -4.0, -5.0], get_scale("1-5"))
    assert c.raw_logprobs == (-1.0, -2.0, -3.0, -4.0, -5.0)


@given(st.lists(finite, min_size=2, max_size=9))
def test_curve_invariants(logits):
    scale = build_scale("numeric-ordinal", [str(i) for i in range(1, len(logits) + 1)])
    c = curve_from_logits(logits, scale)
    n = len(logits)
    assert abs(math.fsum(c.distribution.probs) - 1) <= 1e-9
    assert all(p > 0 for p in c.distribution.probs)
    for s, p in zip(c.surprisals, c.distribution.probs):
        assert s >= 0 and abs(s + math.log(p)) <= 1e-9
    assert 0 <= c.entropy <= math.log(n)
    assert c.surprisal(c.argmin_position) == min(c.surprisals)
    assert c.argmin_position in c.argmin_ties
    # among tied surprisals the larger raw logit wins, then the lowest position
    best = max(logits[p - 1] for p in c.argmin_ties)
    assert c.argmin_position == min(p for p in c.argmin_ties if logits[p - 1] == best)
    ref = oracles.softmax(logits)
    assert np.allclose(c.distribution.probs, ref, rtol=0, atol=1e-12)


@given(st.lists(finite, min_size=2, max_size=9), st.floats(min_value=-1e3, max_value=1e3))
def test_softmax_shift_invariance(logits, c):
    a, b = softmax(logits), softmax([x + c for x in logits])
    assert np.max(np.abs(a - b)) <= 1e-12


@given(st.lists(finite, min_size=2, max_size=9))
def test_entropy_hits_ln_n_only_for_uniform(logits):
    p = softmax(logits)
    h = entropy_of(p)
    if abs(h - math.log(len(p))) <= 1e-12:
        assert np.allclose(p, 1 / len(p), atol=1e-5)


@given(st.floats(min_value=1e-300, max_value=1.0), st.floats(min_value=1e-300, max_value=1.0))
def test_surprisal_strictly_decreasing(p, q):
    if p < q:
        assert surprisal_of_prob(p) > surprisal_of_prob(q)


def test_restricted_distribution_lookup():
    d = RestrictedDistribution("x", (1, 2), (0.25, 0.75))
    assert d.prob(2) == 0.75
