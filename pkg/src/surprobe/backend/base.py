from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

from ..errors import MalformedResponse

RESOLUTIONS = ("exact-token", "top-k-match", "echo-scored", "mock")


@dataclass(frozen=True)
class ScoreRequest:
    model_id: str
    context_text: str
    surfaces: tuple[str, ...]
    # routing hint for scripted mocks; not part of the cache key
    item_id: str | None = None

    def __post_init__(self):
        surfaces = tuple(self.surfaces)
        if not surfaces:
            raise ValueError("a score request needs at least one surface")
        if len(set(surfaces)) != len(surfaces):
            raise ValueError(f"surfaces must be distinct: {list(surfaces)}")
        object.__setattr__(self, "surfaces", surfaces)


@dataclass(frozen=True)
class ScoredSurface:
    surface: str
    raw_logprob: float
    resolution: str


@dataclass(frozen=True)
class ScoredAlternatives:
    entries: tuple[ScoredSurface, ...]
    provider: str
    latency_ms: float = 0.0
    meta: Mapping[str, object] = field(default_factory=dict)

    __hash__ = None

    @property
    def surfaces(self) -> list[str]:
        return [e.surface for e in self.entries]

    @property
    def logprobs(self) -> list[float]:
        return [e.raw_logprob for e in self.entries]

    def get(self, surface: str) -> ScoredSurface:
        for e in self.entries:
            if e.surface == surface:
                return e
        raise KeyError(surface)

    def to_dict(self) -> dict:
        d = {
            "provider": self.provider,
            "latency_ms": self.latency_ms,
            "entries": [[e.surface, e.raw_logprob, e.resolution] for e in self.entries],
        }
        if self.meta:
            d["meta"] = dict(self.meta)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScoredAlternatives":
        try:
            entries = tuple(ScoredSurface(str(s), float(lp), str(r)) for s, lp, r in d["entries"])
            return cls(entries, str(d["provider"]), float(d.get("latency_ms", 0.0)), dict(d.get("meta", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponse(f"bad scored-alternatives record: {exc}") from None

    def validate(self, request: ScoreRequest) -> "ScoredAlternatives":
        if tuple(self.surfaces) != request.surfaces:
            raise MalformedResponse(f"backend answered {self.surfaces}, asked for {list(request.surfaces)}")
        for e in self.entries:
            if not math.isfinite(e.raw_logprob):
                raise MalformedResponse(f"non-finite log-probability for {e.surface!r}")
            if e.resolution != "mock" and e.raw_logprob > 0:
                raise MalformedResponse(f"log-probability {e.raw_logprob} > 0 for {e.surface!r}")
            if e.resolution not in RESOLUTIONS:
                raise MalformedResponse(f"unknown resolution {e.resolution!r}")
        return self


class Backend(Protocol):
    kind: str

    def score(self, request: ScoreRequest) -> ScoredAlternatives: ...


def _frame(parts: Sequence[str]) -> bytes:
    out = bytearray()
    for p in parts:
        b = p.encode("utf-8")
        out += len(b).to_bytes(8, "big") + b
    return bytes(out)


def cache_key(kind: str, request: ScoreRequest) -> str:
    """SHA-256 over length-prefixed (provider kind, model, context, surfaces...)."""
    return hashlib.sha256(_frame([kind, request.model_id, request.context_text, *request.surfaces])).hexdigest()
