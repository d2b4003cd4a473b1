"""Render task items into scoring prompts over a factorial grid."""

from __future__ import annotations

import itertools
import re
from dataclasses import asdict, dataclass, field
from string import Template as _StrTemplate
from typing import Iterator, Mapping, Sequence

from ..errors import EmptyDataset, PromptError, UnresolvedPlaceholder
from ..scales import ScaleSpec, get_scale
from .datasets import TaskItem
from .templates import (
    BACKGROUND,
    CONTEXT_LEVELS,
    DELIMITERS,
    PERSONA_TEXT,
    PERSONAS,
    SECTIONS,
    Template,
    TemplateRegistry,
)

FACTORS = ("context", "persona", "delimiter", "framing", "scale", "model")

_OPEN = re.compile(r"^\[\[([A-Z_]+)\]\]$")
_CLOSE = re.compile(r"^\[\[/([A-Z_]+)\]\]$")

_REFS = {
    "xml": {"code_ref": "the code in <CODE_INFORMATION>", "text_ref": "the text in <TEXT_TO_CODE>"},
    "all-caps": {"code_ref": "the code in CODE INFORMATION", "text_ref": "the text in TEXT TO CODE"},
    "none": {"code_ref": "this code", "text_ref": "this text"},
}


@dataclass(frozen=True)
class FactorCell:
    context: str = "none"
    persona: str = "none"
    delimiter: str = "none"
    framing: str = "default"
    scale: str = "1-5"
    model: str = "mock"

    def as_dict(self) -> dict:
        return asdict(self)

    def key(self) -> str:
        return "|".join(getattr(self, f) for f in FACTORS)


@dataclass(frozen=True)
class FactorGrid:
    context_levels: Sequence[str] = ("none",)
    personas: Sequence[str] = ("none",)
    delimiters: Sequence[str] = ("none",)
    framings: Sequence[str] = ("default",)
    scales: Sequence[str] = ("1-5",)
    models: Sequence[str] = ("mock",)

    def __post_init__(self):
        for name in ("context_levels", "personas", "delimiters", "framings", "scales", "models"):
            values = tuple(getattr(self, name))
            if not values:
                raise PromptError(f"grid factor {name!r} is empty")
            if len(set(values)) != len(values):
                raise PromptError(f"grid factor {name!r} has repeated values {list(values)}")
            object.__setattr__(self, name, values)
        for name, allowed in (("context_levels", CONTEXT_LEVELS), ("personas", PERSONAS), ("delimiters", DELIMITERS)):
            bad = [v for v in getattr(self, name) if v not in allowed]
            if bad:
                raise PromptError(f"grid factor {name!r} has unknown values {bad}; allowed {allowed}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "FactorGrid":
        aliases = {"contexts": "context_levels", "context": "context_levels", "persona": "personas",
                   "delimiter": "delimiters", "framing": "framings", "scale": "scales", "model": "models"}
        kw = {}
        for k, v in d.items():
            k = aliases.get(k, k)
            if k not in cls.__dataclass_fields__:
                raise PromptError(f"unknown grid factor {k!r}")
            kw[k] = tuple([v] if isinstance(v, str) else v)
        return cls(**kw)

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in self.__dataclass_fields__}

    def cells(self) -> list[FactorCell]:
        return [
            FactorCell(*combo)
            for combo in itertools.product(
                self.context_levels, self.personas, self.delimiters, self.framings, self.scales, self.models
            )
        ]

    def __len__(self) -> int:
        n = 1
        for k in self.__dataclass_fields__:
            n *= len(getattr(self, k))
        return n


@dataclass(frozen=True)
class PromptInstance:
    item_id: str
    cell: FactorCell
    scale_id: str
    context_text: str
    created_from: str


# -- section markup ------------------------------------------------------------

def apply_delimiters(body: str, style: str) -> str:
    out: list[str] = []
    for line in body.split("\n"):
        m_open, m_close = _OPEN.match(line), _CLOSE.match(line)
        if m_open:
            name = m_open.group(1)
            if style == "xml":
                out.append(f"<{name}>")
            elif style == "all-caps":
                out.append(name.replace("_", " ") + ":")
        elif m_close:
            if style == "xml":
                out.append(f"</{m_close.group(1)}>")
        else:
            out.append(line)
    text = "\n".join(out)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip("\n")


def strip_delimiters(text: str, style: str) -> str:
    """Remove delimiter markup so renders that differ only in delimiter
    style compare equal."""
    names = "|".join(SECTIONS)
    if style == "xml":
        text = re.sub(rf"(?m)^</?(?:{names})>$", "", text)
        text = re.sub(rf"<((?:{names}))>", r"\1", text)
    elif style == "all-caps":
        spaced = "|".join(s.replace("_", " ") for s in SECTIONS)
        text = re.sub(rf"(?m)^(?:{spaced}):$", "", text)
        for s in SECTIONS:
            text = text.replace(s.replace("_", " "), s)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip("\n")


# -- rendering -------------------------------------------------------------------

def _anchor_map(template: Template, scale: ScaleSpec) -> dict[int, str]:
    if template.anchors:
        out = {}
        for where, text in template.anchors.items():
            if where == "low":
                out[scale.low] = text
            elif where == "high":
                out[scale.high] = text
            elif where == "mid":
                mid = scale.midpoint
                if mid is not None and mid.denominator == 1:
                    out[int(mid)] = text
        return out
    anchors = dict(scale.anchors)
    if template.reverse_anchors and scale.low in anchors and scale.high in anchors:
        anchors[scale.low], anchors[scale.high] = anchors[scale.high], anchors[scale.low]
    return anchors


def _values(item: TaskItem, template: Template, scale: ScaleSpec, cell: FactorCell) -> dict[str, str]:
    v: dict[str, str] = {k: str(x) for k, x in item.payload.items() if isinstance(x, (str, int, float))}
    v["low"], v["high"] = str(scale.low), str(scale.high)
    anchors = _anchor_map(template, scale)
    if anchors:
        v["anchor_lines"] = "\n".join(f"{p} = {anchors[p]}" for p in sorted(anchors))
    if scale.low in anchors:
        v["low_anchor"] = anchors[scale.low]
    if scale.high in anchors:
        v["high_anchor"] = anchors[scale.high]
    if scale.anchors and all(p in scale.anchors for p in scale.positions):
        v["scale_lines"] = "\n".join(f"- {scale.label_at(p)} = {scale.anchors[p]}" for p in scale.positions)
        v["option_lines"] = "\n".join(f"{scale.label_at(p)}) {scale.anchors[p]}" for p in scale.positions)
    if item.task == "sets":
        v["dimension"] = template.framing
    v.update(_REFS[cell.delimiter])
    if item.task == "coding":
        try:
            v["code_block"] = _StrTemplate(template.code_block).substitute(v)
        except KeyError as exc:
            raise UnresolvedPlaceholder(f"code block needs {exc.args[0]!r}") from None
    return v


def ends_before_target(text: str, scale: ScaleSpec) -> bool:
    if scale.leading_space:
        return text.endswith(":")
    return text.endswith(": ")


def render(
    template_id: str,
    item: TaskItem,
    cell: FactorCell,
    scale: ScaleSpec,
    registry: TemplateRegistry | None = None,
) -> PromptInstance:
    """Render one prompt. Pure: identical inputs give byte-identical text."""
    registry = registry or _default_registry()
    template = registry.get_id(template_id)
    if template.task != item.task:
        raise PromptError(f"template {template.id!r} does not apply to {item.task!r} item {item.item_id!r}")
    if item.task == "sets" and template.framing not in item["expected"]:
        raise UnresolvedPlaceholder(f"SETS item {item.item_id!r} has no expected score for {template.framing!r}")
    _, body = template.body_for(scale)
    skeleton = apply_delimiters(body, cell.delimiter)
    values = _values(item, template, scale, cell)
    try:
        text = _StrTemplate(skeleton).substitute(values)
    except KeyError as exc:
        raise UnresolvedPlaceholder(
            f"{template.id}: placeholder ${exc.args[0]} not resolvable for item {item.item_id!r} on scale {scale.id!r}"
        ) from None
    except ValueError as exc:
        raise UnresolvedPlaceholder(f"{template.id}: malformed placeholder ({exc})") from None

    parts = []
    if PERSONA_TEXT[cell.persona]:
        parts.append(PERSONA_TEXT[cell.persona])
    if cell.context != "none":
        block = BACKGROUND[item.task][cell.context]
        parts.append(apply_delimiters(f"[[BACKGROUND]]\n\n{block}\n\n[[/BACKGROUND]]", cell.delimiter))
    parts.append(text)
    prompt = "\n\n".join(parts)
    if not scale.leading_space:
        prompt += " "
    if not ends_before_target(prompt, scale):
        raise PromptError(f"{template.id}: rendered prompt does not end at the completion slot")
    return PromptInstance(item.item_id, cell, scale.id, prompt, template.id)


def render_cell(item: TaskItem, cell: FactorCell, registry: TemplateRegistry | None = None,
                scales: Mapping[str, ScaleSpec] | None = None) -> PromptInstance:
    registry = registry or _default_registry()
    template = registry.get(item.task, cell.framing)
    return render(template.id, item, cell, get_scale(cell.scale, scales), registry)


class GridEnumeration:
    """Deterministic item-major stream of prompts; ``len()`` is known up front."""

    def __init__(self, grid: FactorGrid, dataset: Sequence[TaskItem], registry=None, scales=None):
        if not dataset:
            raise EmptyDataset("dataset has no items")
        self.grid = grid
        self.items = sorted(dataset, key=lambda it: it.item_id)
        self.cells = grid.cells()
        self.registry = registry or _default_registry()
        self.scales = scales

    def __len__(self) -> int:
        return len(self.items) * len(self.cells)

    def keys(self) -> Iterator[tuple[TaskItem, FactorCell]]:
        for item in self.items:
            for cell in self.cells:
                yield item, cell

    def __iter__(self) -> Iterator[PromptInstance]:
        for item, cell in self.keys():
            yield render_cell(item, cell, self.registry, self.scales)


def enumerate_grid(grid: FactorGrid, dataset: Sequence[TaskItem], registry=None, scales=None) -> GridEnumeration:
    return GridEnumeration(grid, dataset, registry, scales)


_REGISTRY: TemplateRegistry | None = None


def _default_registry() -> TemplateRegistry:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = TemplateRegistry()
    return _REGISTRY
