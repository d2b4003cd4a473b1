"""Surprisal-based evaluation of language models over restricted completion sets."""

from .errors import SurprobeError
from .metrics import (
    LabeledOutcome,
    aggregate,
    binary_accuracy,
    directional_accuracy,
    mae,
    paired_discrimination,
    thresholded_prf,
)
from .runner import ExperimentConfig, RunSummary, resume, run
from .scales import ScaleSpec, build_scale, completion_form, get_scale, presets
from .shape import CurveShape, analyze, classify_confidence
from .surprisal import SurprisalCurve, build_curve, entropy_of, renormalize, softmax, surprisal_of_prob

__version__ = "0.1.0"

__all__ = [
    "CurveShape",
    "ExperimentConfig",
    "LabeledOutcome",
    "RunSummary",
    "ScaleSpec",
    "SurprisalCurve",
    "SurprobeError",
    "aggregate",
    "analyze",
    "binary_accuracy",
    "build_curve",
    "build_scale",
    "classify_confidence",
    "completion_form",
    "directional_accuracy",
    "entropy_of",
    "get_scale",
    "mae",
    "paired_discrimination",
    "presets",
    "renormalize",
    "resume",
    "run",
    "softmax",
    "surprisal_of_prob",
    "thresholded_prf",
]
