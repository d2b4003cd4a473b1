"""Built-in prompt texts.

Template bodies use ``string.Template`` placeholders plus a small line-level
section markup: a line ``[[NAME]]`` opens a section and ``[[/NAME]]`` closes
it. The factory turns those lines into XML tags, ALL CAPS headers, or nothing,
depending on the delimiter factor. Bodies never include the persona or the
background block; the factory prepends those.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..errors import UnknownTemplate

TASKS = ("sets", "causal-binary", "causal-ordinal", "figurative", "coding")
CONTEXT_LEVELS = ("none", "minimal", "full")
PERSONAS = ("none", "qualitative-researcher", "domain-expert")
DELIMITERS = ("xml", "all-caps", "none")

SECTIONS = ("BACKGROUND", "TEXT_TO_CODE", "CODE_INFORMATION", "TASK")


# -- background blocks ---------------------------------------------------------

_SETS_DIMENSIONS = """\
The Social-Ecological-Technological Systems (SETS) framework analyzes entities across three interconnected dimensions:

Social: Human aspects such as community interactions, governance, economic systems, cultural values, and social equity

Ecological: The natural environment and its components, often involved in biophysical processes, including natural resources, ecosystem functions, and environmental conditions

Technological: Human-made systems and engineered infrastructures, including infrastructure, technological tools, and innovations"""

_SETS_GUIDANCE = """\
The framework can be used to classify entities and concepts based on their alignment with these dimensions. When doing so, it is helpful to consider not only the entity but the surrounding context in which it was mentioned."""

_CAUSAL_MINIMAL = """\
Causality refers to relationships where one event causes or influences another. Look for statements that express how one thing brings about, leads to, or is responsible for another thing."""

_CAUSAL_FULL = """\
Causal relationships can be indicated through various linguistic structures and at different levels of language. Be aware of the following indicators:

a) Explicit markers: because, since, therefore, thus, hence, consequently, so that, in order to
b) Causal verbs: cause, result, produce, generate, lead, induce, trigger, prompt
c) Noun phrases: causes, reasons, effects, consequences, outcomes
d) Adverbial clauses: due to, owing to, as a result of, because of
e) Implied causation: If-then constructions, resultative constructions
f) Causal reasoning: expressions of purpose (to, in order to), statements of intention (intend to, aim to)
g) Types of causatives: Lexical, Morphological, Periphrastic
h) Causal chain complexity: Simple (A causes B) or complex (A causes B, which causes C)
i) Temporal ordering: Cause typically precedes effect, but language allows various orderings
j) Counterfactual causality: "If X hadn't happened, Y wouldn't have occurred"
k) Causal strength and probability: Language expressing degrees of causal influence
l) Discourse-level causality: Causal relationships spanning across sentences
m) Implicit causality: Verbs carrying implicit causal information
n) Correlation vs. Causation: Be particularly careful to distinguish between:
- True causal relationships where one event directly influences another
- Mere temporal correlation or co-occurrence
- Statistical association without clear causation
- Sequential events without proven causation
o) Multiple causation: When multiple distinct causal relationships exist in the same statement
p) Causal chains: When A causes B, which in turn causes C
q) Parallel causation: When multiple causes lead to the same effect
r) Branching causation: When one cause leads to multiple effects"""

_FIGURATIVE_FULL = """\
Figurative language uses words or expressions with meanings different from their literal interpretation to create vivid imagery, comparisons, or emphasis. Key types include:

1. METAPHORS: Direct comparisons that state one thing IS another thing (e.g., "Love is a battlefield")
2. ANALOGIES: Extended comparisons that explain one concept by comparing it to another (e.g., "The economy works like a machine")
3. SIMILES: Comparisons using "like" or "as" (e.g., "Bright as the sun")
4. PERSONIFICATION: Giving human characteristics to non-human things (e.g., "The ocean roared with fury")

Metaphors create implicit comparisons without using comparison words, while analogies typically involve more detailed structural comparisons between different domains. Similes make explicit comparisons using comparison words, and personification attributes human qualities to non-human entities."""

_FIGURATIVE_MINIMAL = """\
Figurative language uses non-literal meanings to create comparisons or emphasis. Key types:
- Metaphors: Direct comparisons (X is Y) without "like/as"
- Analogies: Extended comparisons explaining concepts through structural similarities
- Similes: Explicit comparisons using "like" or "as"
- Personification: Giving human qualities to non-human things"""

# no published wording for these two; kept short and descriptive
_CODING_MINIMAL = """\
Deductive coding applies predefined codes (with definitions) to unstructured text."""

_CODING_FULL = """\
Deductive coding applies predefined codes (with definitions) to unstructured text. A researcher starts from a codebook in which every code has a name and a definition, reads each text segment, and decides which codes describe it.

A code applies when the text expresses the idea captured by the code's definition, either explicitly or by clear implication. Sharing words with the code name is not enough for a code to apply. A single text can receive several codes, and most codes will not apply to any given text."""

BACKGROUND: dict[str, dict[str, str]] = {
    "sets": {"minimal": _SETS_DIMENSIONS, "full": _SETS_DIMENSIONS + "\n\n" + _SETS_GUIDANCE},
    "causal-binary": {"minimal": _CAUSAL_MINIMAL, "full": _CAUSAL_FULL},
    "causal-ordinal": {"minimal": _CAUSAL_MINIMAL, "full": _CAUSAL_FULL},
    "figurative": {"minimal": _FIGURATIVE_MINIMAL, "full": _FIGURATIVE_FULL},
    "coding": {"minimal": _CODING_MINIMAL, "full": _CODING_FULL},
}

PERSONA_TEXT = {
    "none": "",
    "qualitative-researcher": "You are an experienced qualitative researcher skilled in systematic coding and analysis of textual data.",
    "domain-expert": "You are a domain expert with extensive knowledge of the subject matter discussed in the text.",
}


# -- task bodies ---------------------------------------------------------------

_SETS_BODY = """\
Consider the following context and entity:

Context: "$context"

Entity: "$entity"

On a scale from $low-$high, where $low corresponds to the entity having no $dimension characteristics and $high corresponds to extremely high $dimension characteristics, the entity "$entity" score on the $dimension dimension is:"""

_CAUSAL_TRUE_FALSE = """\
Statement: "$statement"
This statement expresses a causal relationship:"""

_CAUSAL_YES_NO = """\
Does the following statement express a causal relationship?

"$statement"

Answer (Yes or No):"""

_CAUSAL_CHOICE = """\
Which option describes this statement?

"$statement"

$option_lines

Answer:"""

_BIPOLAR = """\
On a scale from $low to $high, rate the causal content of this statement:

"$statement"

$anchor_lines

Rating:"""

_BELIEF = """\
The following statement expresses a causal relationship: True or False

"$statement"

On a scale from $low to $high, how strongly do you believe this answer:

$anchor_lines

Rating:"""

_PROBABILITY = """\
What is the probability that this statement expresses causality:

"$statement"

Rate from $low to $high:

$anchor_lines

Rating:"""

_STRENGTH = """\
How strong is the causal content in this statement:

"$statement"

Rate from $low to $high:

$anchor_lines

Rating:"""

_DUAL = """\
Rate this statement on both dimensions:

"$statement"

A) How causal is this statement? ($low to $high)
$low = Not causal at all, $high = Highly causal

B) How non-causal is this statement? ($low to $high)
$low = Not non-causal at all, $high = Highly non-causal

A) Rating:"""

_METAPHOR_TF = """\
The following statement contains a metaphor: True or False

"$statement"

Answer:"""

_ANALOGY_YN = """\
Does the following statement contain an analogy?

"$statement"

Answer (Yes or No):"""

_METAPHOR_INTENSITY = """\
On a scale from $low to $high, rate how metaphorical this statement is:

"$statement"

$anchor_lines

Rating:"""

_ANALOGY_STRENGTH = """\
On a scale from $low to $high, rate the analogical content of this statement:

"$statement"

$anchor_lines

Rating:"""

_MULTI_CATEGORY = """\
Does this statement contain a metaphor, analogy, simile, personification, or none of these?

"$statement"

Answer:"""

_CODING_HEAD = """\
[[TEXT_TO_CODE]]

Survey Response: "$text"

[[/TEXT_TO_CODE]]

[[CODE_INFORMATION]]

$code_block

[[/CODE_INFORMATION]]

[[TASK]]

Your task is to rate how well the given code applies to the survey response text.

[[/TASK]]

"""

_CODING_NUMERIC = _CODING_HEAD + """\
On a scale from $low-$high, where $low means "$low_anchor" and $high means "$high_anchor", the score for applying $code_ref to $text_ref is:"""

_CODING_INTENSITY = _CODING_HEAD + """\
Use the following scale:
$scale_lines

Using the scale provided above, the intensity of applicability of $code_ref to $text_ref is:"""

_CODING_EVIDENCE = _CODING_HEAD + """\
Use the following scale:
$scale_lines

Using the scale provided above, the evidence that $code_ref applies to $text_ref is:"""

_CODING_FALSE_TRUE = _CODING_HEAD + """\
Use the following scale:
$scale_lines

Using the scale provided above, the statement 'given the context, this code should be applied to this text' is:"""

_CODING_VARIANTS = {
    "numeric-ordinal": _CODING_NUMERIC,
    "intensity": _CODING_INTENSITY,
    "evidence": _CODING_EVIDENCE,
    "false-true": _CODING_FALSE_TRUE,
}


@dataclass(frozen=True)
class Template:
    """One (task, framing) prompt family.

    ``bodies`` maps a scale id or scale kind to the body used for that scale;
    lookup tries the id first. ``anchors`` holds framing-specific anchor text
    keyed ``low``/``mid``/``high``; when empty the scale's own anchors are used.
    """

    task: str
    framing: str
    bodies: Mapping[str, str]
    anchors: Mapping[str, str] = field(default_factory=dict)
    code_block: str = "Code: $code\n\nDefinition: $definition"
    reverse_anchors: bool = False

    __hash__ = None

    @property
    def id(self) -> str:
        return f"{self.task}/{self.framing}"

    def body_for(self, scale) -> tuple[str, str]:
        for key in (scale.id, scale.kind):
            if key in self.bodies:
                return key, self.bodies[key]
        raise UnknownTemplate(
            f"template {self.id!r} has no variant for scale {scale.id!r} "
            f"(supports: {sorted(self.bodies)})"
        )


def _t(task, framing, bodies, **kw) -> Template:
    return Template(task, framing, bodies, **kw)


_NUMERIC = "numeric-ordinal"

BUILTIN: list[Template] = [
    *[_t("sets", dim, {_NUMERIC: _SETS_BODY}) for dim in ("social", "ecological", "technological")],
    _t("causal-binary", "binary", {
        "true-false": _CAUSAL_TRUE_FALSE,
        "yes-no": _CAUSAL_YES_NO,
        "binary-choice": _CAUSAL_CHOICE,
    }),
    _t("causal-ordinal", "bipolar-causality", {_NUMERIC: _BIPOLAR},
       anchors={"low": "Definitely non-causal", "mid": "Neutral/uncertain", "high": "Definitely causal"}),
    _t("causal-ordinal", "belief-strength", {_NUMERIC: _BELIEF},
       anchors={"low": "Definitely False (not causal)", "high": "Definitely True (causal)"}),
    _t("causal-ordinal", "probability", {"1-5": _PROBABILITY},
       anchors={"low": "20% probability (very unlikely to be causal)",
                "high": "100% probability (very likely to be causal)"}),
    _t("causal-ordinal", "causal-strength", {_NUMERIC: _STRENGTH},
       anchors={"low": "No causal content", "high": "Very strong causal content"}),
    _t("causal-ordinal", "dual-classification", {"dual-a": _DUAL, "dual-b": _DUAL, "1-5": _DUAL}),
    _t("figurative", "metaphor-true-false", {"true-false": _METAPHOR_TF}),
    _t("figurative", "analogy-yes-no", {"yes-no": _ANALOGY_YN}),
    _t("figurative", "metaphor-intensity", {_NUMERIC: _METAPHOR_INTENSITY},
       anchors={"low": "Completely literal", "mid": "Somewhat metaphorical", "high": "Highly metaphorical"}),
    _t("figurative", "analogy-strength", {_NUMERIC: _ANALOGY_STRENGTH},
       anchors={"low": "No analogy present", "mid": "Moderate analogical content", "high": "Strong analogy"}),
    _t("figurative", "multi-category", {"figurative-category": _MULTI_CATEGORY}),
    _t("coding", "standard", _CODING_VARIANTS),
    _t("coding", "reversed", {_NUMERIC: _CODING_NUMERIC}, reverse_anchors=True),
    _t("coding", "code-only", _CODING_VARIANTS, code_block="Code: $code"),
    _t("coding", "definition-only", _CODING_VARIANTS, code_block="Definition: $definition"),
]

DEFAULT_FRAMING = {
    "sets": "ecological",
    "causal-binary": "binary",
    "causal-ordinal": "causal-strength",
    "figurative": "metaphor-intensity",
    "coding": "standard",
}


class TemplateRegistry:
    """Built-in templates, optionally overridden from a directory.

    An override file is named ``<task>__<framing>__<variant>.txt`` where
    ``variant`` is a scale id or kind; its content replaces that body (a
    trailing newline is dropped). Unknown (task, framing) pairs create new
    templates, so custom framings can be added without code changes.
    """

    def __init__(self, override_dir: str | Path | None = None):
        self._templates: dict[tuple[str, str], Template] = {(t.task, t.framing): t for t in BUILTIN}
        self.override_dir = Path(override_dir) if override_dir else None
        if self.override_dir is not None:
            self._load_overrides(self.override_dir)

    def _load_overrides(self, root: Path) -> None:
        for path in sorted(root.glob("*.txt")):
            parts = path.stem.split("__")
            if len(parts) != 3 or parts[0] not in TASKS:
                raise UnknownTemplate(f"override file {path.name!r} is not <task>__<framing>__<variant>.txt")
            task, framing, variant = parts
            body = path.read_text(encoding="utf-8").rstrip()
            old = self._templates.get((task, framing)) or Template(task, framing, {})
            bodies = dict(old.bodies)
            bodies[variant] = body
            self._templates[(task, framing)] = Template(
                task, framing, bodies, old.anchors, old.code_block, old.reverse_anchors
            )

    def get(self, task: str, framing: str) -> Template:
        if framing == "default":
            framing = DEFAULT_FRAMING.get(task, framing)
        try:
            return self._templates[(task, framing)]
        except KeyError:
            known = sorted(f for t, f in self._templates if t == task)
            raise UnknownTemplate(f"no template for task {task!r} framing {framing!r}; known: {known}") from None

    def get_id(self, template_id: str) -> Template:
        task, _, framing = template_id.partition("/")
        return self.get(task, framing)

    def framings(self, task: str) -> list[str]:
        return sorted(f for t, f in self._templates if t == task)

    def __iter__(self):
        return iter(self._templates.values())
