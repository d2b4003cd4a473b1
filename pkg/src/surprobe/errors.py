"""Exception hierarchy.

Every error raised on purpose by this package derives from ``SurprobeError``,
so callers (and the CLI) can separate operator mistakes from bugs.
"""


class SurprobeError(Exception):
    """Base class for all package errors."""


# scales

class ScaleError(SurprobeError, ValueError):
    pass


class DuplicateLabel(ScaleError):
    pass


class InvalidLabel(ScaleError):
    pass


class LengthMismatch(ScaleError):
    pass


class NonMonotonePositions(ScaleError):
    pass


class MidpointOutOfRange(ScaleError):
    pass


class UnknownPosition(ScaleError, KeyError):
    pass


class UnknownScale(ScaleError, KeyError):
    pass


class ProbeUnavailable(SurprobeError):
    pass


# prompts and datasets

class PromptError(SurprobeError, ValueError):
    pass


class UnknownTemplate(PromptError):
    pass


class UnresolvedPlaceholder(PromptError):
    pass


class EmptyDataset(PromptError):
    pass


class SchemaViolation(PromptError):
    pass


class DanglingPair(SchemaViolation):
    pass


# backends

class BackendError(SurprobeError):
    pass


class ProviderUnreachable(BackendError):
    pass


class SurfaceUnresolvable(BackendError):
    pass


class MalformedResponse(BackendError):
    pass


class CacheCorrupt(BackendError):
    pass


# numeric core

class SurprisalError(SurprobeError, ValueError):
    pass


class NonPositiveProbability(SurprisalError):
    pass


class NonFiniteLogit(SurprisalError):
    pass


class ArityMismatch(SurprisalError):
    pass


class NonFiniteSurprisal(SurprisalError):
    pass


class CurveTooShort(SurprisalError):
    pass


# metrics and reporting

class MetricError(SurprobeError, ValueError):
    pass


class EmptyGroup(MetricError):
    pass


class ScaleMismatch(MetricError):
    pass


class MidpointUndefined(MetricError):
    pass


class IncompletePair(MetricError):
    pass


class UnknownFactor(MetricError):
    pass


class NoMatch(SurprobeError, LookupError):
    pass


# runner

class ConfigError(SurprobeError, ValueError):
    pass


class ConfigDigestMismatch(ConfigError):
    pass
