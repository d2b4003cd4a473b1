"""Surprisal, restricted renormalization, entropy and argmin verdicts.

All quantities are in nats (natural log). Surprisal on a curve is taken from
the distribution renormalized over the scale's alternatives, so curves from
backends that leak different amounts of mass outside the scale stay
comparable; the raw log-probabilities are kept next to it for audit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backend.base import ScoredAlternatives
from .errors import ArityMismatch, NonFiniteLogit, NonFiniteSurprisal, NonPositiveProbability
from .scales import ScaleSpec, completion_form

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-300


def surprisal_of_prob(p: float) -> float:
    if not (isinstance(p, (int, float)) and math.isfinite(p)) or p <= 0 or p > 1:
        raise NonPositiveProbability(f"surprisal needs 0 < p <= 1, got {p!r}")
    return -math.log(p) + 0.0  # + 0.0 turns -0.0 into 0.0


@dataclass(frozen=True)
class RestrictedDistribution:
    scale_id: str
    positions: tuple[int, ...]
    probs: tuple[float, ...]

    def prob(self, position: int) -> float:
        return self.probs[self.positions.index(position)]


@dataclass(frozen=True)
class BinaryVerdict:
    cls: str  # "positive" | "negative"
    delta: float

    @property
    def positive(self) -> bool:
        return self.cls == "positive"


@dataclass(frozen=True)
class SurprisalCurve:
    scale_id: str
    positions: tuple[int, ...]
    surprisals: tuple[float, ...]
    distribution: RestrictedDistribution
    entropy: float
    argmin_position: int
    argmin_ties: tuple[int, ...]
    raw_logprobs: tuple[float, ...]
    raw: ScoredAlternatives | None = None

    def surprisal(self, position: int) -> float:
        return self.surprisals[self.positions.index(position)]

    def binary_verdict(self) -> BinaryVerdict:
        if sorted(self.positions) != [0, 1]:
            raise ArityMismatch(f"scale {self.scale_id!r} is not binary")
        return binary_decide(self.surprisal(1), self.surprisal(0))


def _logits_by_position(scored: ScoredAlternatives, scale: ScaleSpec) -> tuple[list[int], np.ndarray]:
    if len(scored.entries) != scale.n:
        raise ArityMismatch(f"{len(scored.entries)} scored alternatives for a {scale.n}-point scale {scale.id!r}")
    by_surface = {e.surface: e.raw_logprob for e in scored.entries}
    positions = sorted(scale.positions)
    logits = []
    for p in positions:
        surface = completion_form(scale, p).surface
        if surface not in by_surface:
            raise ArityMismatch(f"no score for {surface!r} (scale {scale.id!r}, position {p})")
        logits.append(by_surface[surface])
    arr = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteLogit(f"non-finite logits {logits} for scale {scale.id!r}")
    return positions, arr


def softmax(logits: Sequence[float]) -> np.ndarray:
    x = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NonFiniteLogit(f"non-finite logits {list(x)}")
    z = np.exp(x - x.max())
    return z / z.sum()


def renormalize(scored: ScoredAlternatives, scale: ScaleSpec) -> RestrictedDistribution:
    positions, logits = _logits_by_position(scored, scale)
    p = softmax(logits)
    if np.any(p < PROB_FLOOR):
        log.info("clamping %d underflowed probabilities on scale %s", int(np.sum(p < PROB_FLOOR)), scale.id)
        p = np.maximum(p, PROB_FLOOR)
    return RestrictedDistribution(scale.id, tuple(positions), tuple(float(v) for v in p))


def entropy_of(dist: RestrictedDistribution | Sequence[float]) -> float:
    probs = np.asarray(dist.probs if isinstance(dist, RestrictedDistribution) else dist, dtype=np.float64)
    nz = probs[probs > 0]
    h = float(-np.sum(nz * np.log(nz)))
    # rounding can land a hair outside [0, ln n]
    upper = math.log(len(probs))
    if h < 0:
        h = 0.0
    elif h > upper and h - upper < 1e-9:
        h = upper
    return h


def binary_decide(s_true: float, s_false: float) -> BinaryVerdict:
    for s in (s_true, s_false):
        if not math.isfinite(s) or s < 0:
            raise NonFiniteSurprisal(f"surprisal must be finite and >= 0, got {s!r}")
    return BinaryVerdict("positive" if s_true < s_false else "negative", abs(s_true - s_false))


def build_curve(scored: ScoredAlternatives, scale: ScaleSpec) -> SurprisalCurve:
    positions, logits = _logits_by_position(scored, scale)
    dist = renormalize(scored, scale)
    surprisals = tuple(-math.log(p) + 0.0 for p in dist.probs)
    best = min(surprisals)
    ties = tuple(p for p, s in zip(positions, surprisals) if s == best)
    # floating point can merge distinct logits into one surprisal; the raw
    # logit breaks such ties before position does
    idx = min(range(len(positions)), key=lambda i: (surprisals[i], -logits[i], positions[i]))
    return SurprisalCurve(
        scale_id=scale.id,
        positions=tuple(positions),
        surprisals=surprisals,
        distribution=dist,
        entropy=entropy_of(dist),
        argmin_position=positions[idx],
        argmin_ties=ties,
        raw_logprobs=tuple(float(v) for v in logits),
        raw=scored,
    )


def curve_from_logits(logits: Sequence[float], scale: ScaleSpec) -> SurprisalCurve:
    """Convenience: build a curve from logits listed in ascending position order."""
    from .backend.base import ScoredSurface

    positions = sorted(scale.positions)
    if len(logits) != len(positions):
        raise ArityMismatch(f"{len(logits)} logits for a {len(positions)}-point scale")
    entries = tuple(
        ScoredSurface(completion_form(scale, p).surface, float(x), "mock") for p, x in zip(positions, logits)
    )
    return build_curve(ScoredAlternatives(entries, "inline"), scale)
