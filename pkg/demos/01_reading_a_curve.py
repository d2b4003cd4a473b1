"""Reading a surprisal curve by hand.

Three made-up logit vectors over a 1-5 rating scale stand in for three
kinds of model answer: a confident one, a hedged one and one torn between
two ratings. For each we look at where the minimum sits, how much entropy
is left, and what the curve's shape says.

    python demos/01_reading_a_curve.py
"""

import math

import numpy as np

from surprobe import analyze, classify_confidence, get_scale
from surprobe.surprisal import curve_from_logits

scale = get_scale("1-5")

answers = {
    "confident": [-9.0, -7.5, -5.0, -2.0, -0.1],
    "hedged": [-2.4, -1.6, -1.2, -1.5, -2.2],
    "torn": [-1.0, -3.5, -4.0, -3.0, -1.1],
}

print(f"scale {scale.id}: labels {[scale.label_at(p) for p in sorted(scale.positions)]}")
print(f"maximum possible entropy ln 5 = {math.log(5):.3f} nats\n")

for name, logits in answers.items():
    curve = curve_from_logits(logits, scale)
    shape = analyze(curve)
    bars = "  ".join(f"{p}:{s:5.2f}" for p, s in zip(curve.positions, curve.surprisals))
    print(f"{name:>9}  {bars}")
    print(f"{'':>9}  argmin {curve.argmin_position}, entropy {curve.entropy:.3f}, "
          f"{shape.monotonicity}, minima {list(shape.local_minima)}, {classify_confidence(shape)}")

# Renormalizing over the five labels never changes their order, so the
# curve's minimum is always the label with the largest raw logit.
rng = np.random.default_rng(0)
logits = rng.normal(0, 3, 5)
curve = curve_from_logits(logits, scale)
assert curve.argmin_position == int(np.argmax(logits)) + 1
print(f"\nrandom logits {np.round(logits, 2).tolist()} -> argmin {curve.argmin_position} "
      f"(largest raw logit at position {int(np.argmax(logits)) + 1})")
