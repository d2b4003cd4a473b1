"""Deterministic in-process scorer for offline runs and tests."""

from __future__ import annotations

import fnmatch
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .base import ScoredAlternatives, ScoredSurface, ScoreRequest, _frame

LOGIT_LOW, LOGIT_HIGH = -10.0, 0.0


def hash_logit(model_id: str, context_text: str, surface: str, seed: int = 0) -> float:
    """Stable 64-bit hash of the inputs mapped affinely onto [-10, 0]."""
    digest = hashlib.blake2b(_frame([str(seed), model_id, context_text, surface]), digest_size=8).digest()
    u = int.from_bytes(digest, "big") / (2**64 - 1)
    return LOGIT_LOW + (LOGIT_HIGH - LOGIT_LOW) * u


@dataclass(frozen=True)
class MockRule:
    item: str = "*"
    model: str = "*"
    logits: Mapping[str, float] = field(default_factory=dict)
    default: float | None = None

    __hash__ = None

    def matches(self, request: ScoreRequest) -> bool:
        return fnmatch.fnmatchcase(request.item_id or "", self.item) and fnmatch.fnmatchcase(request.model_id, self.model)


class MockTable:
    """Scripted logits. The first rule whose ``item`` and ``model`` glob
    patterns match decides; a surface missing from its ``logits`` gets the
    rule's ``default``, or the hash logit when there is no default.

    JSON form::

        {"rules": [{"item": "cb-*", "model": "*", "logits": {" True": -0.1}, "default": -5.0}]}
    """

    def __init__(self, rules: Sequence[MockRule] = ()):
        self.rules = list(rules)

    @classmethod
    def from_dict(cls, d: Mapping) -> "MockTable":
        rules = d["rules"] if isinstance(d, Mapping) else d
        return cls([
            MockRule(r.get("item", "*"), r.get("model", "*"),
                     {k: float(v) for k, v in r.get("logits", {}).items()}, r.get("default"))
            for r in rules
        ])

    @classmethod
    def load(cls, path: str | Path) -> "MockTable":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        return {"rules": [{"item": r.item, "model": r.model, "logits": dict(r.logits), "default": r.default}
                          for r in self.rules]}

    def lookup(self, request: ScoreRequest, surface: str) -> float | None:
        for rule in self.rules:
            if rule.matches(request):
                if surface in rule.logits:
                    return rule.logits[surface]
                return None if rule.default is None else float(rule.default)
        return None


def mock_score(request: ScoreRequest, seed_table: MockTable | None = None, seed: int = 0) -> ScoredAlternatives:
    entries = []
    for s in request.surfaces:
        value = seed_table.lookup(request, s) if seed_table is not None else None
        if value is None:
            value = hash_logit(request.model_id, request.context_text, s, seed)
        entries.append(ScoredSurface(s, value, "mock"))
    return ScoredAlternatives(tuple(entries), "mock")


class MockBackend:
    kind = "mock"

    def __init__(self, table: MockTable | None = None, seed: int = 0):
        self.table = table
        self.seed = seed

    @property
    def cache_namespace(self) -> str:
        ns = f"mock/seed={self.seed}"
        if self.table is not None:
            blob = json.dumps(self.table.to_dict(), sort_keys=True).encode()
            ns += "/table=" + hashlib.sha256(blob).hexdigest()[:16]
        return ns

    def score(self, request: ScoreRequest) -> ScoredAlternatives:
        return mock_score(request, self.table, self.seed)
