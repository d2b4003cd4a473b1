"""Rating scales and the exact completion strings submitted for scoring."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from .errors import (
    DuplicateLabel,
    InvalidLabel,
    LengthMismatch,
    MidpointOutOfRange,
    NonMonotonePositions,
    ProbeUnavailable,
    UnknownPosition,
    UnknownScale,
)

log = logging.getLogger(__name__)

KINDS = ("binary", "numeric-ordinal", "qualitative-ordinal")

# static fallback when no tokenizer is reachable
HEURISTIC_MAX_BYTES = 12


@dataclass(frozen=True)
class ScaleSpec:
    id: str
    kind: str
    labels: tuple[str, ...]
    positions: tuple[int, ...]
    anchors: Mapping[int, str] = field(default_factory=dict)
    midpoint: Fraction | None = None
    leading_space: bool = True

    __hash__ = None  # anchors is a dict

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def low(self) -> int:
        return min(self.positions)

    @property
    def high(self) -> int:
        return max(self.positions)

    @property
    def is_binary(self) -> bool:
        return self.kind == "binary"

    def label_at(self, position: int) -> str:
        try:
            return self.labels[self.positions.index(position)]
        except ValueError:
            raise UnknownPosition(f"scale {self.id!r} has no position {position}") from None

    def surfaces(self) -> list[str]:
        return [completion_form(self, p).surface for p in self.positions]

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "kind": self.kind,
            "labels": list(self.labels),
            "positions": list(self.positions),
            "anchors": {str(k): v for k, v in sorted(self.anchors.items())},
            "leading_space": self.leading_space,
        }
        if self.midpoint is not None:
            d["midpoint"] = str(self.midpoint)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScaleSpec":
        mid = d.get("midpoint")
        return build_scale(
            d["kind"],
            d["labels"],
            d["positions"],
            anchors={int(k): v for k, v in d.get("anchors", {}).items()},
            midpoint=Fraction(mid) if mid is not None else None,
            id=d["id"],
            leading_space=d.get("leading_space", True),
        )


@dataclass(frozen=True)
class CompletionForm:
    scale_id: str
    position: int
    surface: str


def build_scale(
    kind: str,
    labels: Sequence[str],
    positions: Sequence[int] | None = None,
    anchors: Mapping[int, str] | None = None,
    midpoint: Fraction | int | str | None = None,
    *,
    id: str | None = None,
    leading_space: bool = True,
) -> ScaleSpec:
    """Validate and construct a scale.

    Binary scales take positions 0 (negative) and 1 (positive) in any label
    order, e.g. ``["True", "False"]`` -> ``[1, 0]``. Ordinal scales need
    strictly increasing positions and a midpoint strictly inside the range;
    when omitted the midpoint defaults to the centre of the range.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown scale kind {kind!r}; expected one of {KINDS}")
    labels = tuple(labels)
    if positions is None:
        if kind == "binary":
            raise LengthMismatch("binary scales need explicit 0/1 positions")
        positions = range(1, len(labels) + 1)
    positions = tuple(int(p) for p in positions)

    for lab in labels:
        if not isinstance(lab, str) or not lab or lab != lab.strip():
            raise InvalidLabel(f"label {lab!r} is empty or padded with whitespace")
        if any(ch.isspace() for ch in lab):
            raise InvalidLabel(f"label {lab!r} has internal whitespace; labels must be single words")
    if len(set(labels)) != len(labels):
        raise DuplicateLabel(f"duplicate labels in {list(labels)}")
    if len(labels) != len(positions):
        raise LengthMismatch(f"{len(labels)} labels but {len(positions)} positions")
    if len(labels) < 2:
        raise LengthMismatch("a scale needs at least two alternatives")

    if kind == "binary":
        if len(labels) != 2:
            raise LengthMismatch("binary scales have exactly two labels")
        if sorted(positions) != [0, 1]:
            raise NonMonotonePositions(f"binary positions must be {{0, 1}}, got {list(positions)}")
        if midpoint is not None:
            midpoint = Fraction(midpoint)
    else:
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise NonMonotonePositions(f"positions not strictly increasing: {list(positions)}")
        lo, hi = positions[0], positions[-1]
        midpoint = Fraction(lo + hi, 2) if midpoint is None else Fraction(midpoint)
        if not lo < midpoint < hi:
            raise MidpointOutOfRange(f"midpoint {midpoint} not strictly inside [{lo}, {hi}]")

    anchors = dict(anchors or {})
    for p in anchors:
        if p not in positions:
            raise UnknownPosition(f"anchor for position {p} which is not on the scale")

    if id is None:
        id = "-".join(labels).lower() if kind != "numeric-ordinal" else f"{positions[0]}-{positions[-1]}"
    return ScaleSpec(id, kind, labels, positions, anchors, midpoint, leading_space)


def completion_form(scale: ScaleSpec, position: int) -> CompletionForm:
    label = scale.label_at(position)
    surface = " " + label if scale.leading_space else label
    return CompletionForm(scale.id, position, surface)


def parse_surface(scale: ScaleSpec, surface: str) -> int:
    """Inverse of ``completion_form``: surface string -> position."""
    label = surface[1:] if scale.leading_space and surface.startswith(" ") else surface
    if label not in scale.labels:
        raise UnknownPosition(f"{surface!r} is not a completion of scale {scale.id!r}")
    return scale.positions[scale.labels.index(label)]


# -- single-token checks ----------------------------------------------------

class TokenizationProbe(Protocol):
    def count_tokens(self, text: str) -> int: ...


class CallableProbe:
    """Adapts ``fn(text) -> list_of_tokens`` (e.g. a HF tokenizer's
    ``tokenize``) or ``fn(text) -> int`` into a probe."""

    def __init__(self, fn):
        self.fn = fn

    def count_tokens(self, text: str) -> int:
        out = self.fn(text)
        return out if isinstance(out, int) else len(out)


@dataclass(frozen=True)
class TokenCheck:
    label: str
    surface: str
    status: str  # verified-single | verified-multi | unverified-pass | heuristic-reject
    n_tokens: int | None = None

    @property
    def ok(self) -> bool:
        return self.status in ("verified-single", "unverified-pass")


def heuristic_single_token(label: str) -> bool:
    return len(label.encode("utf-8")) <= HEURISTIC_MAX_BYTES and not any(c.isspace() for c in label.strip())


def check_surface(surface: str, probe: TokenizationProbe | None = None) -> TokenCheck:
    """Check one arbitrary completion string (which may hold several words)."""
    label = surface[1:] if surface.startswith(" ") else surface
    if probe is not None:
        try:
            n = probe.count_tokens(surface)
        except ProbeUnavailable as exc:
            log.warning("tokenization probe unavailable (%s); using heuristic", exc)
        else:
            return TokenCheck(label, surface, "verified-single" if n == 1 else "verified-multi", n)
    status = "unverified-pass" if heuristic_single_token(label) else "heuristic-reject"
    return TokenCheck(label, surface, status)


def validate_single_token(scale: ScaleSpec, probe: TokenizationProbe | None = None) -> list[TokenCheck]:
    return [check_surface(completion_form(scale, p).surface, probe) for p in scale.positions]


# -- catalog ----------------------------------------------------------------

def load_catalog(path: str | Path | None = None) -> dict[str, ScaleSpec]:
    if path is None:
        text = resources.files("surprobe").joinpath("data/scales.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text)
    entries = data["scales"] if isinstance(data, dict) else data
    out: dict[str, ScaleSpec] = {}
    for entry in entries:
        scale = ScaleSpec.from_dict(entry)
        if scale.id in out:
            raise DuplicateLabel(f"scale id {scale.id!r} defined twice")
        out[scale.id] = scale
    return out


def dump_catalog(scales: Iterable[ScaleSpec], path: str | Path) -> None:
    doc = {"schema": "surprobe.scales/1", "scales": [s.to_dict() for s in scales]}
    Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


@lru_cache(maxsize=None)
def _builtin() -> dict[str, ScaleSpec]:
    return load_catalog()


def presets() -> dict[str, ScaleSpec]:
    return dict(_builtin())


def get_scale(scale_id: str, extra: Mapping[str, ScaleSpec] | None = None) -> ScaleSpec:
    if extra and scale_id in extra:
        return extra[scale_id]
    try:
        return _builtin()[scale_id]
    except KeyError:
        raise UnknownScale(f"unknown scale {scale_id!r}; known: {sorted(_builtin())}") from None
