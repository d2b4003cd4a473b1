"""Task items and the JSON Lines dataset format."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

from ..errors import DanglingPair, SchemaViolation
from .templates import TASKS

# required payload fields and their types
SCHEMA: dict[str, dict[str, type | tuple[type, ...]]] = {
    "sets": {"entity": str, "context": str, "expected": dict},
    "causal-binary": {"statement": str, "causal": bool},
    "causal-ordinal": {"statement": str, "causal": bool},
    "figurative": {"statement": str, "pair_id": str, "figurative": bool},
    "coding": {"text": str, "code": str, "definition": str, "applicable": bool},
}

SETS_DIMENSIONS = ("social", "ecological", "technological")

SAMPLES = {
    "sets": "sets.jsonl",
    "causal-binary": "causal_binary.jsonl",
    "causal-ordinal": "causal_ordinal.jsonl",
    "figurative": "figurative.jsonl",
    "coding": "coding.jsonl",
}


@dataclass(frozen=True)
class TaskItem:
    item_id: str
    task: str
    payload: Mapping[str, Any] = field(default_factory=dict)

    __hash__ = None

    def __getitem__(self, key):
        return self.payload[key]

    def gold(self, framing: str | None = None) -> dict:
        """Ground truth carried into result records."""
        p = self.payload
        if self.task == "sets":
            dim = framing if framing in p["expected"] else p.get("dimension")
            if dim is None:
                return {}
            return {"expected": p["expected"].get(dim), "dimension": dim}
        if self.task in ("causal-binary", "causal-ordinal"):
            g = {"causal": p["causal"]}
            if "category" in p:
                g["category"] = p["category"]
            return g
        if self.task == "figurative":
            return {"figurative": p["figurative"], "pair_id": p["pair_id"]}
        return {"applicable": p["applicable"]}

    def to_json(self) -> dict:
        return {"item_id": self.item_id, "task": self.task, **self.payload}


def item_from_json(obj: Mapping, where: str = "") -> TaskItem:
    if not isinstance(obj, Mapping):
        raise SchemaViolation(f"{where}record is not an object")
    obj = dict(obj)
    item_id = obj.pop("item_id", None)
    task = obj.pop("task", None)
    if not isinstance(item_id, str) or not item_id:
        raise SchemaViolation(f"{where}missing or empty item_id")
    if task not in TASKS:
        raise SchemaViolation(f"{where}unknown task {task!r}; expected one of {TASKS}")
    for key, typ in SCHEMA[task].items():
        if key not in obj:
            raise SchemaViolation(f"{where}{task} item {item_id!r} lacks field {key!r}")
        if not isinstance(obj[key], typ):
            raise SchemaViolation(f"{where}field {key!r} of {item_id!r} should be {typ.__name__}")
    if task == "sets":
        exp = obj["expected"]
        bad = [k for k, v in exp.items() if k not in SETS_DIMENSIONS or isinstance(v, bool) or not isinstance(v, int)]
        if bad or not exp:
            raise SchemaViolation(f"{where}expected scores of {item_id!r} must map {SETS_DIMENSIONS} to integers")
    return TaskItem(item_id, task, obj)


def validate_items(items: list[TaskItem]) -> list[TaskItem]:
    seen: set[str] = set()
    for it in items:
        if it.item_id in seen:
            raise SchemaViolation(f"duplicate item_id {it.item_id!r}")
        seen.add(it.item_id)

    pairs: dict[str, list[TaskItem]] = defaultdict(list)
    for it in items:
        if it.task == "figurative":
            pairs[it["pair_id"]].append(it)
    for pid, members in pairs.items():
        flags = sorted(m["figurative"] for m in members)
        if flags != [False, True]:
            raise DanglingPair(
                f"pair {pid!r} needs one figurative and one literal item, got {len(members)} "
                f"item(s) with flags {flags}"
            )
    return items


def load_dataset(path: str | Path) -> list[TaskItem]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except UnicodeDecodeError as exc:
        raise SchemaViolation(f"{path}: not UTF-8 text ({exc})") from None
    items = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{path}:{n}: invalid JSON ({exc.msg})") from None
        items.append(item_from_json(obj, f"{path}:{n}: "))
    if not items:
        raise SchemaViolation(f"{path}: no records")
    return validate_items(items)


def dump_dataset(items: Iterable[TaskItem], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for it in items:
            fh.write(json.dumps(it.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def sample_path(task: str) -> Path:
    """Filesystem path of the small illustrative dataset shipped for ``task``."""
    return Path(str(resources.files("surprobe").joinpath("data", SAMPLES[task])))


def load_sample(task: str) -> list[TaskItem]:
    return load_dataset(sample_path(task))
