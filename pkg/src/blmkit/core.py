"""Core data model for Blackbird Language Matrix (BLM) puzzles.

A BLM instance is a sequence of seven context sentences that follow hidden
linguistic rules, plus a minimally contrastive answer set in which exactly
one candidate continues the sequence correctly.  This module holds the
shared vocabulary: chunk-annotated sentences, canonical chunk-pattern keys,
templates, instances, and the task-scoped error labels.

Everything here is an immutable value object; generation, validation and
solving live in the sibling modules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

TASKS = (
    "agr",
    "spray-load-ALT-ATL",
    "spray-load-ATL-ALT",
    "cos",
    "od",
    "roll",
)

VARIATIONS = ("I", "II", "III")

CLAUSE_TYPES = ("main", "relative", "completive")

# Answer labels per task, in template row order (the position of "Correct"
# matches the source template; instances shuffle answer order at generation).
TASK_LABELS = {
    "agr": ("Correct", "Coord", "WNA", "WN1", "WN2", "AEV", "AEN1", "AEN2"),
    "spray-load-ALT-ATL": (
        "Correct", "AgentAct", "Alt-NP", "Alt-PP", "NoEmb",
        "LexPrep", "SSM-1", "SSM-2", "AASSM",
    ),
    "spray-load-ATL-ALT": (
        "Correct", "AgentAct", "Alt-NP", "Alt-PP", "NoEmb",
        "LexPrep", "SSM-1", "SSM-2", "AASSM",
    ),
    "cos": (
        "Correct", "I-Int", "ER-Pass", "IER-Pass",
        "R-Trans", "IR-Trans", "E-WrBy", "IE-WrBy",
    ),
    "od": (
        "I-Int", "Correct", "IER-Pass", "ER-Pass",
        "IR-Trans", "R-Trans", "IE-WrBy", "E-WrBy",
    ),
    "roll": ("Scrc", "Sc-rr", "Rr", "Correct", "Psc-rs", "Psc-rr", "Pc-rr"),
}

ANSWER_SET_SIZES = {
    "agr": 8,
    "spray-load-ALT-ATL": 9,
    "spray-load-ATL-ALT": 9,
    "cos": 8,
    "od": 8,
    "roll": 7,
}

CONTEXT_LENGTH = 7

# Chunk roles, grouped by the template families that use them.
AGR_ROLES = ("subject-np", "pp1", "pp2", "vp")
ALTERNATION_ROLES = (
    "np-agent", "np-theme", "np-loc",
    "pp-agent", "pp-theme", "pp-loc",
    "p-np", "by-np",
    "verb-active", "verb-passive",
    "auxiliary",
)
ALL_ROLES = AGR_ROLES + ALTERNATION_ROLES

TASK_ROLES = {
    "agr": frozenset(AGR_ROLES),
    "spray-load-ALT-ATL": frozenset(ALTERNATION_ROLES),
    "spray-load-ATL-ALT": frozenset(ALTERNATION_ROLES),
    "cos": frozenset(ALTERNATION_ROLES),
    "od": frozenset(ALTERNATION_ROLES),
    "roll": frozenset(ALTERNATION_ROLES),
}


class BlmError(Exception):
    """Base error for the toolkit; message carries structured context."""


class UnknownRoleError(BlmError):
    def __init__(self, role: str, task: str):
        super().__init__(f"unknown chunk role {role!r} for task {task!r}")
        self.role = role
        self.task = task


@dataclass(frozen=True)
class ChunkSpec:
    """One labeled constituent slot: a role plus its task-relevant attributes.

    ``features`` is a sorted tuple of (name, value) pairs so specs are
    hashable; use :meth:`get` or :func:`chunk` for ergonomic access.
    ``slot`` names the lexicon slot the chunk draws its surface form from.
    """

    role: str
    features: tuple = ()
    slot: str = ""

    def __post_init__(self):
        if self.role not in ALL_ROLES:
            raise BlmError(f"chunk role {self.role!r} not in role vocabulary")
        object.__setattr__(self, "features", tuple(sorted(self.features)))

    def get(self, name: str, default=None):
        for key, value in self.features:
            if key == name:
                return value
        return default

    def with_features(self, **updates) -> "ChunkSpec":
        merged = {k: v for k, v in self.features}
        merged.update(updates)
        feats = tuple((k, v) for k, v in merged.items() if v is not None)
        return ChunkSpec(self.role, feats, self.slot)


def chunk(role: str, slot: str = "", **features) -> ChunkSpec:
    feats = tuple((k, str(v)) for k, v in features.items() if v is not None)
    return ChunkSpec(role, feats, slot)


@dataclass(frozen=True)
class SentenceTemplate:
    """Ordered chunk specs for one row of a matrix."""

    chunks: tuple
    clause_type: str = "main"

    def __post_init__(self):
        if not self.chunks:
            raise BlmError("sentence template needs at least one chunk")
        if self.clause_type not in CLAUSE_TYPES:
            raise BlmError(f"unknown clause type {self.clause_type!r}")
        object.__setattr__(self, "chunks", tuple(self.chunks))


@dataclass(frozen=True)
class RelationalRule:
    """A cross-row rule: an attribute alternates with a period, or a
    countable attribute progresses.

    ``probe`` names a structural probe ("subject-np.number",
    "attractors.count", "adjunct.prep", "frame.kind", ...) evaluated on each
    row by the oracle.  Alternation cycles through ``values`` every
    ``period`` rows starting at row ``start``; progression adds ``step`` to
    ``base`` every ``period`` rows.
    """

    kind: str  # "alternation" | "progression"
    probe: str
    values: tuple = ()
    period: int = 1
    phase: int = 0
    start: int = 0
    base: int = 0
    step: int = 1

    def __post_init__(self):
        if self.kind not in ("alternation", "progression"):
            raise BlmError(f"unknown rule kind {self.kind!r}")
        if self.period < 1:
            raise BlmError("rule period must be >= 1")
        if self.kind == "alternation" and len(self.values) < 2:
            raise BlmError("alternation needs at least two values")
        object.__setattr__(self, "values", tuple(self.values))

    def expected(self, row: int):
        """Expected probe value at ``row`` (0-based), or None if the rule
        does not apply there."""
        if row < self.start:
            return None
        offset = (row - self.start) // self.period
        if self.kind == "alternation":
            return self.values[(offset + self.phase) % len(self.values)]
        return self.base + self.step * offset


@dataclass(frozen=True)
class AnswerSpec:
    """One answer row of a template: its structure, its label, and the
    violation set the design assigns to that label (empty for Correct)."""

    template: SentenceTemplate
    label: str
    violations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))


@dataclass(frozen=True)
class BlmTemplate:
    """The formal tuple behind one task: shape, row specs, answer specs with
    their designed violations, and the declarative cross-row rules."""

    task: str
    language: str
    context_rows: tuple  # 7 SentenceTemplate
    answer_rows: tuple   # AnswerSpec, task-fixed count
    relational_rules: tuple = ()
    max_chunks: int = 4
    paradigm_break: int = 0  # rows per paradigm when the context repeats (roll)

    def __post_init__(self):
        if self.task not in TASKS:
            raise BlmError(f"unknown task {self.task!r}")
        if len(self.context_rows) != CONTEXT_LENGTH:
            raise BlmError(
                f"{self.task}: expected {CONTEXT_LENGTH} context rows, "
                f"got {len(self.context_rows)}"
            )
        want = ANSWER_SET_SIZES[self.task]
        if len(self.answer_rows) != want:
            raise BlmError(
                f"{self.task}: expected {want} answer rows, got {len(self.answer_rows)}"
            )
        labels = [a.label for a in self.answer_rows]
        if sorted(labels) != sorted(TASK_LABELS[self.task]):
            raise BlmError(
                f"{self.task}: answer labels {labels} do not match the task label set"
            )
        if labels.count("Correct") != 1:
            raise BlmError("template must have exactly one Correct answer row")
        for row in self.context_rows:
            for c in row.chunks:
                if c.role not in TASK_ROLES[self.task]:
                    raise UnknownRoleError(c.role, self.task)
        object.__setattr__(self, "context_rows", tuple(self.context_rows))
        object.__setattr__(self, "answer_rows", tuple(self.answer_rows))
        object.__setattr__(self, "relational_rules", tuple(self.relational_rules))

    @property
    def shape(self):
        return (CONTEXT_LENGTH + 1, self.max_chunks)

    @property
    def correct_row(self) -> AnswerSpec:
        return next(a for a in self.answer_rows if a.label == "Correct")


@dataclass(frozen=True)
class Sentence:
    """A realized sentence: surface text plus its chunk annotation.

    Invariant: the chunk spans joined by single spaces reproduce ``text``,
    and ``pattern`` equals ``pattern_of`` over the chunk specs.
    """

    text: str
    chunks: tuple  # tuple of (ChunkSpec, span string)
    pattern: str

    def __post_init__(self):
        object.__setattr__(self, "chunks", tuple(self.chunks))
        joined = " ".join(span for _, span in self.chunks)
        if joined != self.text:
            raise BlmError(
                f"chunk spans {joined!r} do not reproduce sentence text {self.text!r}"
            )

    def specs(self) -> tuple:
        return tuple(spec for spec, _ in self.chunks)


def make_sentence(chunks_with_spans, task: str) -> Sentence:
    """Assemble a Sentence, capitalizing the first span and deriving the
    pattern key from the chunk specs."""
    chunks = list(chunks_with_spans)
    spec0, span0 = chunks[0]
    if span0 and not span0[0].isupper():
        chunks[0] = (spec0, span0[0].upper() + span0[1:])
    text = " ".join(span for _, span in chunks)
    pattern = pattern_of([spec for spec, _ in chunks], task)
    return Sentence(text=text, chunks=tuple(chunks), pattern=pattern)


@dataclass(frozen=True)
class BlmInstance:
    """One puzzle: 7 context sentences and a labeled answer set."""

    task: str
    language: str
    variation: str
    context: tuple            # 7 Sentence
    answers: tuple            # tuple of (Sentence, label)
    correct_index: int
    seed_id: str = ""
    instance_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        object.__setattr__(self, "answers", tuple(self.answers))

    def answer_sentences(self):
        return tuple(s for s, _ in self.answers)

    def labels(self):
        return tuple(lab for _, lab in self.answers)

    def validate(self):
        """Raise BlmError on any structural invariant violation.

        Kept out of __post_init__ so that deliberately malformed instances
        can be constructed for the rule-checking oracle to flag.
        """
        if self.task not in TASKS:
            raise BlmError(f"unknown task {self.task!r}")
        if self.variation not in VARIATIONS:
            raise BlmError(f"unknown variation {self.variation!r}")
        if len(self.context) != CONTEXT_LENGTH:
            raise BlmError(f"context length {len(self.context)} != {CONTEXT_LENGTH}")
        want = ANSWER_SET_SIZES[self.task]
        if len(self.answers) != want:
            raise BlmError(f"answer set size {len(self.answers)} != {want}")
        labels = self.labels()
        for lab in labels:
            if lab not in TASK_LABELS[self.task]:
                raise BlmError(f"label {lab!r} not valid for task {self.task!r}")
        if labels.count("Correct") != 1:
            raise BlmError("instance must have exactly one Correct answer")
        if labels[self.correct_index] != "Correct":
            raise BlmError("correct_index does not point at the Correct answer")
        texts = [s.text for s, _ in self.answers]
        if len(set(texts)) != len(texts):
            raise BlmError("answer texts are not pairwise distinct")


# ---------------------------------------------------------------------------
# Pattern keys
# ---------------------------------------------------------------------------

_AGR_TOKEN = {"subject-np": "np", "pp1": "pp1", "pp2": "pp2", "vp": "vp"}

_ALT_TOKEN = {
    "verb-active": "v-act",
    "verb-passive": "v-pass",
    "p-np": "p-np",
    "by-np": "by-np",
}


def _agr_token(spec: ChunkSpec) -> str:
    parts = [_AGR_TOKEN[spec.role]]
    number = spec.get("number")
    if number:
        parts.append(number)
    if spec.get("prep") == "coord":
        parts.append("coord")
    return "-".join(parts)


def _alt_token(spec: ChunkSpec) -> str:
    if spec.role in _ALT_TOKEN:
        return _ALT_TOKEN[spec.role]
    if spec.role == "auxiliary":
        return f"aux-{spec.get('aux', 'x')}"
    # np-*/pp-* roles already carry the semantic role in the role name
    parts = [spec.role]
    prep = spec.get("prep")
    if prep == "of":
        parts.append("emb")
    elif prep == "wrong":
        parts.append("wrong")
    return "-".join(parts)


def pattern_of(chunks, task: str) -> str:
    """Canonical chunk-pattern signature of a sentence for ``task``.

    Pure and order-preserving: the key lists lowercase role tokens joined by
    single spaces, each suffixed with exactly the attributes that the task's
    relational rules range over (grammatical number for agreement; semantic
    role, voice and marked preposition classes for the alternation tasks).
    """
    chunks = list(chunks)
    if not chunks:
        raise BlmError("pattern_of needs a non-empty chunk list")
    if task not in TASKS:
        raise BlmError(f"unknown task {task!r}")
    roles = TASK_ROLES[task]
    tokens = []
    for spec in chunks:
        if spec.role not in roles:
            raise UnknownRoleError(spec.role, task)
        if task == "agr":
            tokens.append(_agr_token(spec))
        else:
            tokens.append(_alt_token(spec))
    return " ".join(tokens)


def agreement_patterns() -> tuple:
    """All well-formed agreement pattern keys: the three structures crossed
    with number assignments under subject-verb match (2 + 4 + 8 = 14)."""
    from itertools import product

    keys = set()
    for n_attr in (0, 1, 2):
        attractors = ("pp1", "pp2")[:n_attr]
        for subj in ("sg", "pl"):
            for nums in product(("sg", "pl"), repeat=n_attr):
                tokens = [f"np-{subj}"]
                tokens += [f"{role}-{num}" for role, num in zip(attractors, nums)]
                tokens.append(f"vp-{subj}")
                keys.add(" ".join(tokens))
    return tuple(sorted(keys))


def task_pattern_count(task: str) -> int:
    """Number of distinct context patterns the task's sentence bank spans."""
    from .templates import builtin_template, supported_languages
    if task == "agr":
        return len(agreement_patterns())
    lang = supported_languages(task)[0]
    template = builtin_template(task, lang)
    patterns = {
        pattern_of([c for c in row.chunks], task) for row in template.context_rows
    }
    return len(patterns)
