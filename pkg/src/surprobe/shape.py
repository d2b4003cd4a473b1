"""Shape features of a surprisal curve.

Conventions, all in nats and per scale step:

* steepness: mean absolute difference between adjacent positions (or only
  the steps touching the minimum when ``window=1``).
* asymmetry: mean rise per step of the right tail minus that of the left
  tail, both measured moving away from the minimum. Positive means the
  right tail climbs faster. A missing tail contributes 0.
* local minima: positions not above either neighbour by more than eps;
  neighbouring minima (plateaus) collapse to their lowest member.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

from .errors import CurveTooShort
from .surprisal import SurprisalCurve

DEFAULT_EPS = 1e-6
STEEP_ABOVE = 1.0
FLAT_BELOW = 0.25


@dataclass(frozen=True)
class CurveShape:
    min_position: int
    monotonicity: str  # increasing | decreasing | non-monotonic
    local_minima: tuple[int, ...]
    steepness: float
    asymmetry: float
    is_bowl: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["local_minima"] = list(self.local_minima)
        return d

    @classmethod
    def from_dict(cls, d) -> "CurveShape":
        return cls(d["min_position"], d["monotonicity"], tuple(d["local_minima"]),
                   d["steepness"], d["asymmetry"], d["is_bowl"])

    @property
    def multimodal(self) -> bool:
        return len(self.local_minima) > 1


def _monotonicity(diffs: Sequence[float], eps: float) -> str:
    if all(d >= -eps for d in diffs) and any(d > eps for d in diffs):
        return "increasing"
    if all(d <= eps for d in diffs) and any(d < -eps for d in diffs):
        return "decreasing"
    return "non-monotonic"


def _local_minima(s: Sequence[float], eps: float) -> list[int]:
    n = len(s)
    flags = [
        (i == 0 or s[i] <= s[i - 1] + eps) and (i == n - 1 or s[i] <= s[i + 1] + eps)
        for i in range(n)
    ]
    out, i = [], 0
    while i < n:
        if not flags[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and flags[j + 1]:
            j += 1
        out.append(min(range(i, j + 1), key=lambda k: (s[k], k)))
        i = j + 1
    return out


def analyze_values(positions: Sequence[int], surprisals: Sequence[float], eps: float = DEFAULT_EPS,
                   window: int | None = None, min_position: int | None = None) -> CurveShape:
    """``min_position`` overrides the lowest-position argmin, for callers
    that broke a floating-point tie by other means."""
    if len(surprisals) < 2:
        raise CurveTooShort(f"need at least 2 positions, got {len(surprisals)}")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    order = sorted(range(len(positions)), key=lambda i: positions[i])
    pos = [positions[i] for i in order]
    s = [float(surprisals[i]) for i in order]
    n = len(s)
    diffs = [s[i + 1] - s[i] for i in range(n - 1)]
    m = min(range(n), key=lambda i: (s[i], i))
    if min_position is not None:
        m = pos.index(min_position)
        if s[m] != s[min(range(n), key=lambda i: (s[i], i))]:
            raise ValueError(f"position {min_position} is not a minimum of the curve")

    if window is None:
        steep = [abs(d) for d in diffs]
    else:
        lo, hi = max(0, m - window), min(n - 1, m + window)
        steep = [abs(diffs[i]) for i in range(lo, hi)]
    steepness = sum(steep) / len(steep) if steep else 0.0

    right = [diffs[i] for i in range(m, n - 1)]
    left = [-diffs[i] for i in range(0, m)]
    right_slope = sum(right) / len(right) if right else 0.0
    left_slope = sum(left) / len(left) if left else 0.0

    minima = _local_minima(s, eps)
    if m not in minima:  # only reachable through eps-plateaus; keep the invariant
        minima = sorted(set(minima) | {m})
    is_bowl = 0 < m < n - 1 and s[m - 1] - s[m] > eps and s[m + 1] - s[m] > eps
    return CurveShape(
        min_position=pos[m],
        monotonicity=_monotonicity(diffs, eps),
        local_minima=tuple(pos[i] for i in minima),
        steepness=steepness,
        asymmetry=right_slope - left_slope,
        is_bowl=is_bowl,
    )


def analyze(curve: SurprisalCurve, eps: float = DEFAULT_EPS, window: int | None = None) -> CurveShape:
    return analyze_values(curve.positions, curve.surprisals, eps, window, curve.argmin_position)


def classify_confidence(shape: CurveShape | float, steep_above: float = STEEP_ABOVE,
                        flat_below: float = FLAT_BELOW) -> str:
    if not flat_below < steep_above:
        raise ValueError(f"thresholds must satisfy flat ({flat_below}) < steep ({steep_above})")
    steepness = shape.steepness if isinstance(shape, CurveShape) else float(shape)
    if steepness > steep_above:
        return "steep"
    if steepness < flat_below:
        return "flat"
    return "moderate"
