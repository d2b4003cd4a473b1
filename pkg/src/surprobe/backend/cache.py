"""Append-only, content-addressed response cache (JSON Lines)."""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path

from filelock import FileLock

from ..errors import MalformedResponse
from .base import Backend, ScoredAlternatives, ScoreRequest, cache_key

log = logging.getLogger(__name__)


class ScoreCache:
    """One ``{"key": <hex>, "value": <ScoredAlternatives>}`` object per line.

    Lines that fail to parse are copied to ``<path>.quarantine`` and skipped.
    Duplicate keys resolve to the last line. Appends take a file lock so
    several processes can share one cache; a process never sees another's
    writes after it loaded, so at worst it re-scores.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._file_lock = FileLock(str(self.path) + ".lock")
        self._data: dict[str, dict] = {}
        self.quarantined = 0
        self._load()

    @property
    def quarantine_path(self) -> Path:
        return self.path.with_name(self.path.name + ".quarantine")

    def _load(self) -> None:
        if not self.path.exists():
            return
        bad: list[str] = []
        with self._file_lock, open(self.path, "rb") as fh:
            for n, raw in enumerate(fh, 1):
                if not raw.strip():
                    continue
                try:
                    obj = json.loads(raw.decode("utf-8"))
                    key, value = obj["key"], obj["value"]
                    ScoredAlternatives.from_dict(value)
                    if not isinstance(key, str):
                        raise TypeError("key is not a string")
                except (ValueError, KeyError, TypeError, MalformedResponse) as exc:
                    log.warning("cache %s line %d is corrupt (%s); quarantined", self.path, n, exc)
                    bad.append(raw.decode("utf-8", "replace").rstrip("\n"))
                    continue
                self._data[key] = value
        if bad:
            self.quarantined += len(bad)
            with open(self.quarantine_path, "a", encoding="utf-8") as q:
                for line in bad:
                    q.write(line + "\n")

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, key: str) -> bool:
        return key in self._data

    def get(self, key: str) -> ScoredAlternatives | None:
        value = self._data.get(key)
        return None if value is None else ScoredAlternatives.from_dict(value)

    def put(self, key: str, value: ScoredAlternatives) -> None:
        payload = value.to_dict()
        line = json.dumps({"key": key, "value": payload}, ensure_ascii=False, sort_keys=True) + "\n"
        with self._lock:
            self._data[key] = payload
            with self._file_lock, open(self.path, "a", encoding="utf-8") as fh:
                # a crashed writer may have left a partial last line
                if fh.tell() > 0:
                    with open(self.path, "rb") as rd:
                        rd.seek(-1, 2)
                        if rd.read(1) != b"\n":
                            fh.write("\n")
                fh.write(line)


class CachedBackend:
    """Wraps a backend with a ``ScoreCache``; counts hits and misses."""

    def __init__(self, backend: Backend, cache: ScoreCache):
        self.backend = backend
        self.cache = cache
        self.kind = backend.kind
        self.hits = 0
        self.misses = 0
        self._count = threading.Lock()

    def key(self, request: ScoreRequest) -> str:
        return cache_key(getattr(self.backend, "cache_namespace", self.backend.kind), request)

    def score(self, request: ScoreRequest) -> ScoredAlternatives:
        key = self.key(request)
        hit = self.cache.get(key)
        if hit is not None:
            with self._count:
                self.hits += 1
            return hit
        result = self.backend.score(request)
        self.cache.put(key, result)
        with self._count:
            self.misses += 1
        return result


def cached_score(request: ScoreRequest, backend: CachedBackend) -> ScoredAlternatives:
    return backend.score(request)
