"""Builtin matrix templates and the declarative template file format.

Templates live as JSON fixtures under ``blmkit/data/templates`` and can also
be loaded from user-supplied files with :func:`template_from_file`, so new
phenomena can be added without code changes.  The schema is documented in
``docs/formats.md``.
"""

from __future__ import annotations

import json
from importlib import resources

from .core import (
    AnswerSpec,
    BlmError,
    BlmTemplate,
    RelationalRule,
    SentenceTemplate,
    TASKS,
    chunk,
)

TEMPLATE_FORMAT = "blm-template"
TEMPLATE_VERSION = 1

# Task family routes realization and oracle structure checks.
TASK_FAMILY = {
    "agr": "agr",
    "spray-load-ALT-ATL": "spray-load",
    "spray-load-ATL-ALT": "spray-load",
    "cos": "cos-od",
    "od": "cos-od",
    "roll": "roll",
}

_RESERVED_CHUNK_KEYS = ("role", "slot")


def _parse_chunk(obj: dict):
    if "role" not in obj:
        raise BlmError(f"template chunk missing 'role': {obj}")
    features = {k: v for k, v in obj.items() if k not in _RESERVED_CHUNK_KEYS}
    return chunk(obj["role"], slot=obj.get("slot", ""), **features)


def _parse_rule(obj: dict) -> RelationalRule:
    return RelationalRule(
        kind=obj["kind"],
        probe=obj["probe"],
        values=tuple(obj.get("values", ())),
        period=int(obj.get("period", 1)),
        phase=int(obj.get("phase", 0)),
        start=int(obj.get("start", 0)),
        base=int(obj.get("base", 0)),
        step=int(obj.get("step", 1)),
    )


def template_from_dict(data: dict, language: str) -> BlmTemplate:
    if data.get("format") != TEMPLATE_FORMAT:
        raise BlmError(
            f"not a template file: format={data.get('format')!r}, "
            f"expected {TEMPLATE_FORMAT!r}"
        )
    if data.get("version") != TEMPLATE_VERSION:
        raise BlmError(f"unsupported template version {data.get('version')!r}")
    task = data["task"]
    languages = data.get("languages", [])
    if language not in languages:
        raise BlmError(
            f"language {language!r} not supported by template {task!r}; "
            f"supported: {', '.join(languages)}"
        )
    context = tuple(
        SentenceTemplate(tuple(_parse_chunk(c) for c in row),
                         clause_type=data.get("clause_type", "main"))
        for row in data["context"]
    )
    answers = tuple(
        AnswerSpec(
            template=SentenceTemplate(tuple(_parse_chunk(c) for c in a["chunks"]),
                                      clause_type=data.get("clause_type", "main")),
            label=a["label"],
            violations=tuple(a.get("violations", ())),
        )
        for a in data["answers"]
    )
    rules = tuple(_parse_rule(r) for r in data.get("rules", ()))
    return BlmTemplate(
        task=task,
        language=language,
        context_rows=context,
        answer_rows=answers,
        relational_rules=rules,
        max_chunks=int(data.get("max_chunks", 4)),
        paradigm_break=int(data.get("paradigm_break", 0)),
    )


def template_from_file(path, language: str) -> BlmTemplate:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BlmError(f"template file {path}: invalid JSON ({exc})") from exc
    return template_from_dict(data, language)


def _builtin_data(task: str) -> dict:
    ref = resources.files("blmkit").joinpath(f"data/templates/{task}.json")
    if not ref.is_file():
        raise BlmError(f"no builtin template for task {task!r}")
    return json.loads(ref.read_text(encoding="utf-8"))


def supported_pairs():
    """All (task, language) pairs with builtin templates and lexicons."""
    pairs = []
    for task in TASKS:
        for lang in _builtin_data(task)["languages"]:
            pairs.append((task, lang))
    return tuple(pairs)


def supported_languages(task: str):
    if task not in TASKS:
        raise BlmError(f"unknown task {task!r}")
    return tuple(_builtin_data(task)["languages"])


def builtin_template(task: str, language: str) -> BlmTemplate:
    """The shipped template for (task, language).

    Raises a structured error listing the supported pairs when the
    combination is not available.
    """
    if task not in TASKS:
        raise BlmError(
            f"unknown task {task!r}; supported pairs: "
            + ", ".join(f"{t}/{l}" for t, l in supported_pairs())
        )
    data = _builtin_data(task)
    if language not in data["languages"]:
        raise BlmError(
            f"({task}, {language}) is not a supported pair; supported: "
            + ", ".join(f"{t}/{l}" for t, l in supported_pairs())
        )
    return template_from_dict(data, language)


def fixed_slots_type2(task: str) -> tuple:
    """Slots held constant across rows under Type II variation."""
    return tuple(_builtin_data(task).get("fixed_slots_type2", ()))
