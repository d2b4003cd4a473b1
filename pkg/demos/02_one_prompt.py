"""What the model actually sees.

Renders a causal-statement prompt under each context level and scores it
with the offline mock backend, whose numbers are arbitrary but stable.
Point SURPROBE_ENDPOINT at a completions server to see a real model's
answer instead.

    python demos/02_one_prompt.py
    SURPROBE_ENDPOINT=http://localhost:8000/v1/completions SURPROBE_MODEL=my-model python demos/02_one_prompt.py
"""

import os

from surprobe.backend import CompletionsBackend, MockBackend, ScoreRequest
from surprobe.prompts import FactorCell, TaskItem, render
from surprobe.scales import completion_form, get_scale
from surprobe.surprisal import build_curve

item = TaskItem("rain", "causal-binary", {"statement": "The heavy rain caused widespread flooding in the city.",
                                          "causal": True})
scale = get_scale("true-false")
model = os.environ.get("SURPROBE_MODEL", "mock")
backend = CompletionsBackend.from_env() if os.environ.get("SURPROBE_ENDPOINT") else MockBackend()
surfaces = tuple(completion_form(scale, p).surface for p in sorted(scale.positions))

for context in ("none", "minimal", "full"):
    cell = FactorCell(context, framing="binary", scale=scale.id, model=model)
    prompt = render("causal-binary/binary", item, cell, scale)
    curve = build_curve(backend.score(ScoreRequest(model, prompt.context_text, surfaces, item.item_id)), scale)
    verdict = curve.binary_verdict()
    print(f"=== context {context} ({len(prompt.context_text)} chars) ===")
    print("..." + prompt.context_text[-160:])
    print(f"candidates {list(surfaces)}")
    for p, s in zip(curve.positions, curve.surprisals):
        print(f"  S({scale.label_at(p)!r}) = {s:.3f} nats")
    print(f"  verdict {verdict.cls}, margin {verdict.delta:.3f}\n")

if hasattr(backend, "close"):
    backend.close()
