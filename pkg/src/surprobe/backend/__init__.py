from .base import Backend, ScoredAlternatives, ScoredSurface, ScoreRequest, cache_key
from .cache import CachedBackend, ScoreCache, cached_score
from .mock import MockBackend, MockRule, MockTable, hash_logit, mock_score
from .wire import CompletionsBackend

__all__ = [
    "Backend",
    "CachedBackend",
    "CompletionsBackend",
    "MockBackend",
    "MockRule",
    "MockTable",
    "ScoreCache",
    "ScoreRequest",
    "ScoredAlternatives",
    "ScoredSurface",
    "cache_key",
    "cached_score",
    "hash_logit",
    "mock_score",
]
