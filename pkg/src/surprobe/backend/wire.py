"""Client for OpenAI-style ``/v1/completions`` endpoints.

Strategy per request: one next-token call (``max_tokens=1``, temperature 0,
top-k log-probabilities). Surfaces found among the returned tokens are read
directly. Anything else is scored by echo: the prompt plus the surface is
submitted with ``echo=true`` and the log-probability of the token that starts
where the prompt ended is read, provided the surface is exactly that one token.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from typing import Mapping

import httpx

from ..errors import BackendError, MalformedResponse, ProviderUnreachable, SurfaceUnresolvable
from .base import ScoredAlternatives, ScoredSurface, ScoreRequest

log = logging.getLogger(__name__)

ENV_ENDPOINT = "SURPROBE_ENDPOINT"
ENV_API_KEY = "SURPROBE_API_KEY"

# byte-level BPE vocabularies spell a leading space as U+0120
_BPE_SPACE = "Ġ"


def _normalize_token(tok: str) -> str:
    return tok.replace(_BPE_SPACE, " ").replace("▁", " ")


class CompletionsBackend:
    kind = "completions"
    cache_namespace = "completions"

    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        *,
        top_k: int = 20,
        echo_fallback: bool = True,
        max_attempts: int = 3,
        backoff: float = 0.5,
        timeout: float = 30.0,
        max_in_flight: int = 4,
        transport: httpx.BaseTransport | None = None,
    ):
        if max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        self.endpoint = endpoint
        self.top_k = top_k
        self.echo_fallback = echo_fallback
        self.max_attempts = max_attempts
        self.backoff = backoff
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(headers=headers, timeout=timeout, transport=transport)
        self._slots = threading.BoundedSemaphore(max_in_flight)

    @classmethod
    def from_env(cls, **kw) -> "CompletionsBackend":
        endpoint = os.environ.get(ENV_ENDPOINT)
        if not endpoint:
            raise BackendError(f"{ENV_ENDPOINT} is not set")
        return cls(endpoint, os.environ.get(ENV_API_KEY), **kw)

    def close(self) -> None:
        self._client.close()

    def _post(self, payload: Mapping) -> dict:
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self._client.post(self.endpoint, json=payload)
            except httpx.TransportError as exc:
                last = exc
                log.debug("attempt %d/%d failed: %s", attempt + 1, self.max_attempts, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = BackendError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise BackendError(f"provider rejected request: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError:
                raise MalformedResponse("response body is not JSON") from None
        raise ProviderUnreachable(f"{self.endpoint} unreachable after {self.max_attempts} attempts: {last}")

    @staticmethod
    def _logprobs(body: Mapping) -> Mapping:
        try:
            lp = body["choices"][0]["logprobs"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponse("response lacks choices[0].logprobs") from None
        if not isinstance(lp, Mapping):
            raise MalformedResponse("choices[0].logprobs is not an object")
        return lp

    def _top_k(self, request: ScoreRequest) -> dict[str, float]:
        body = self._post({
            "model": request.model_id,
            "prompt": request.context_text,
            "max_tokens": 1,
            "temperature": 0,
            "logprobs": self.top_k,
        })
        lp = self._logprobs(body)
        try:
            top = lp["top_logprobs"][0]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponse("response lacks logprobs.top_logprobs[0]") from None
        if not isinstance(top, Mapping):
            raise MalformedResponse("top_logprobs[0] is not an object")
        return {str(k): float(v) for k, v in top.items()}

    def _echo(self, request: ScoreRequest, surface: str) -> float:
        if not self.echo_fallback:
            raise SurfaceUnresolvable(f"{surface!r} not in top-{self.top_k} and echo scoring is disabled")
        prompt = request.context_text + surface
        try:
            body = self._post({
                "model": request.model_id,
                "prompt": prompt,
                "max_tokens": 0,
                "temperature": 0,
                "echo": True,
                "logprobs": 0,
            })
        except BackendError as exc:
            if isinstance(exc, ProviderUnreachable):
                raise
            raise SurfaceUnresolvable(f"echo scoring of {surface!r} failed: {exc}") from None
        lp = self._logprobs(body)
        tokens, values = lp.get("tokens"), lp.get("token_logprobs")
        if not isinstance(tokens, list) or not isinstance(values, list) or len(tokens) != len(values):
            raise MalformedResponse("echo response lacks aligned tokens/token_logprobs")
        offsets = lp.get("text_offset")
        if not isinstance(offsets, list) or len(offsets) != len(tokens):
            offsets, pos = [], 0
            for t in tokens:
                offsets.append(pos)
                pos += len(t)
        start = len(request.context_text)
        try:
            i = offsets.index(start)
        except ValueError:
            raise SurfaceUnresolvable(f"tokenizer merged {surface!r} with the end of the prompt") from None
        end = offsets[i + 1] if i + 1 < len(offsets) else start + len(tokens[i])
        if end != len(prompt) or values[i] is None:
            raise SurfaceUnresolvable(f"{surface!r} is not a single token for {request.model_id!r}")
        return float(values[i])

    def score(self, request: ScoreRequest) -> ScoredAlternatives:
        t0 = time.perf_counter()
        top = self._top_k(request)
        normalized = {}
        for tok, v in top.items():
            normalized.setdefault(_normalize_token(tok), v)
        entries = []
        for s in request.surfaces:
            if s in top:
                entries.append(ScoredSurface(s, top[s], "exact-token"))
            elif s in normalized:
                entries.append(ScoredSurface(s, normalized[s], "top-k-match"))
            else:
                entries.append(ScoredSurface(s, self._echo(request, s), "echo-scored"))
        latency = round((time.perf_counter() - t0) * 1000.0, 3)
        return ScoredAlternatives(tuple(entries), self.kind, latency).validate(request)
