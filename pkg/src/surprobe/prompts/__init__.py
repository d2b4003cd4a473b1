from .datasets import TaskItem, load_dataset, load_sample, sample_path
from .factory import (
    FACTORS,
    FactorCell,
    FactorGrid,
    PromptInstance,
    enumerate_grid,
    render,
    render_cell,
    strip_delimiters,
)
from .templates import TemplateRegistry

__all__ = [
    "FACTORS",
    "FactorCell",
    "FactorGrid",
    "PromptInstance",
    "TaskItem",
    "TemplateRegistry",
    "enumerate_grid",
    "load_dataset",
    "load_sample",
    "render",
    "render_cell",
    "sample_path",
    "strip_delimiters",
]
