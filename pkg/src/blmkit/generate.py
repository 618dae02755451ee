"""Instance generation: lexical assignment, surface realization, datasets.

``instantiate`` draws a lexical assignment per variation type, realizes the
seven context rows and the answer set from the template's chunk specs, and
shuffles the answers.  Collisions between answer surfaces trigger a bounded
redraw (degenerate lexicons are reported after 16 attempts).  Every
instance derives its own rng stream from (seed, index), so generation is
order-independent and safely parallel.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .core import (
    BlmError,
    BlmInstance,
    BlmTemplate,
    Sentence,
    SentenceTemplate,
    chunk,
    make_sentence,
)
from .lexicon import Lexicon
from .rng import pick, shuffled, substream
from .templates import TASK_FAMILY

MAX_REDRAWS = 16


class DrawError(BlmError):
    """Raised when a lexical draw cannot satisfy distinctness constraints."""


# ---------------------------------------------------------------------------
# Surface realization
# ---------------------------------------------------------------------------

def _num_of(agr: str) -> str:
    # "m_sg" -> "sg", "pl" -> "pl"
    return agr.rsplit("_", 1)[-1]


def _filler(assignment: dict, spec) -> dict:
    if spec.slot not in assignment:
        raise BlmError(
            f"lexical assignment has no filler for slot {spec.slot!r} "
            f"(chunk role {spec.role!r})"
        )
    return assignment[spec.slot]


def _agr_span(spec, assignment, lexicon):
    number = spec.get("number")
    if spec.role == "vp":
        return lexicon.verb(assignment["verb"])["forms"][number]
    item = _filler(assignment, spec)
    if spec.get("prep") == "coord":
        coordinator = lexicon.function_words["coordinator"]
        return f"{coordinator} {item['bare_' + number]}"
    return item[number]


def _sl_span(spec, assignment, lexicon, subject_item):
    entry = lexicon.verb(assignment["verb"])
    if spec.role == "verb-active":
        return entry["forms"]["act"]
    if spec.role == "verb-passive":
        return entry["forms"]["pass_" + _num_of(subject_item["agr"])]
    item = _filler(assignment, spec)
    if spec.role.startswith("np-"):
        return item["text"]
    # prepositional chunk
    prep_class = spec.get("prep")
    if spec.role == "pp-agent" and prep_class == "by":
        return item["by"]
    if prep_class == "of":
        return f"{lexicon.function_words['of']} {item['text']}"
    if prep_class == "wrong":
        wrong = assignment["wrong_prep_loc" if spec.role == "pp-loc" else "wrong_prep_theme"]
        return f"{wrong} {item['text']}"
    canonical = entry["prep"] if spec.role == "pp-loc" else lexicon.function_words["with"]
    return f"{canonical} {item['text']}"


def _cos_span(spec, assignment, lexicon, subject_item, transitive):
    entry = lexicon.verb(assignment["verb"])
    if spec.role == "verb-active":
        mode = "act" if transitive else "anti"
        return entry["forms"][f"{mode}_{_num_of(subject_item['agr'])}"]
    if spec.role == "verb-passive":
        return entry["forms"]["pass_" + subject_item["agr"]]
    if spec.role in ("p-np", "by-np"):
        return _filler(assignment, spec)["text"]
    item = _filler(assignment, spec)
    if spec.role.startswith("np-"):
        return item["text"]
    # pp-agent / pp-theme introduced by the agentive preposition
    return item["by"]


def _roll_span(spec, assignment, lexicon, subject_item):
    if spec.role == "verb-active":
        return lexicon.verb(assignment[spec.slot])["forms"]["act"]
    if spec.role == "auxiliary":
        if spec.get("aux") == "did":
            return lexicon.function_words["aux_did"]
        return lexicon.function_words["aux_was"][_num_of(subject_item["agr"])]
    item = _filler(assignment, spec)
    if spec.get("pro") == "it":
        return lexicon.function_words["pro_it"]
    return item["text"]


def realize_row(row: SentenceTemplate, assignment: dict, lexicon: Lexicon,
                task: str) -> Sentence:
    family = TASK_FAMILY[task]
    specs = row.chunks
    subject_item = None
    if family != "agr":
        first = specs[0]
        if first.slot in assignment and isinstance(assignment.get(first.slot), dict):
            subject_item = assignment[first.slot]
    spans = []
    if family == "agr":
        spans = [(_spec, _agr_span(_spec, assignment, lexicon)) for _spec in specs]
    elif family == "spray-load":
        spans = [(_spec, _sl_span(_spec, assignment, lexicon, subject_item))
                 for _spec in specs]
    elif family == "cos-od":
        transitive = any(s.role.startswith("np-") for s in specs[1:])
        spans = [(_spec, _cos_span(_spec, assignment, lexicon, subject_item, transitive))
                 for _spec in specs]
    elif family == "roll":
        spans = [(_spec, _roll_span(_spec, assignment, lexicon, subject_item))
                 for _spec in specs]
    else:
        raise BlmError(f"no realizer for family {family!r}")
    return make_sentence(spans, task)


# ---------------------------------------------------------------------------
# Lexical draws
# ---------------------------------------------------------------------------

def _pick_unused(rng, items, primary, used):
    free = [it for it in items if it[primary] not in used]
    if not free:
        raise DrawError("slot exhausted under distinctness constraints")
    item = pick(rng, free)
    used.add(item[primary])
    return item


def _core_slots(family: str):
    return {"agr": ("subject", "pp1", "pp2"),
            "spray-load": ("agent", "theme", "loc"),
            "cos-od": ("agent", "theme"),
            "roll": ("agent", "theme", "loc")}[family]


def _primary(family: str) -> str:
    return "sg" if family == "agr" else "text"


def _draw_args(rng, entry, family, used=None):
    out = {}
    for name in _core_slots(family):
        items = entry["slots"][name]
        if used is None:
            out[name] = pick(rng, items)
        else:
            out[name] = _pick_unused(rng, items, _primary(family), used)
    return out


def _draw_adjuncts(rng, lexicon, used=None, needs=("p_np", "by_np")):
    out = {}
    for name in needs:
        items = lexicon.shared_slots[name]
        if used is None:
            out[name] = pick(rng, items)
        else:
            out[name] = _pick_unused(rng, items, "text", used)
    return out


def _adjunct_needs(sentence_template):
    slots = {c.slot for c in sentence_template.chunks if c.role in ("p-np", "by-np")}
    return tuple(sorted(slots))


def _wrong_preps(rng, lexicon, verb_key):
    entry = lexicon.verb(verb_key)
    pool = lexicon.function_words.get("wrong_preps", ())
    out = {}
    for kind, canonical in (("loc", entry.get("prep")),
                            ("theme", lexicon.function_words.get("with"))):
        options = [p for p in pool if p != canonical]
        if options:
            out[f"wrong_prep_{kind}"] = pick(rng, options)
    return out


def _draw_plain(template, lexicon, variation, rng, seed=None):
    """Row/answer assignments for the agr, spray-load and cos-od families."""
    family = TASK_FAMILY[template.task]
    verbs = list(lexicon.verbs())
    has_adjuncts = family == "cos-od"

    def finish(assignment):
        if family == "spray-load":
            assignment.update(_wrong_preps(rng, lexicon, assignment["verb"]))
        return assignment

    if seed is not None:
        base = dict(seed)
        if has_adjuncts:
            base.update(_draw_adjuncts(rng, lexicon))
        base = finish(base)
        return [base] * 7, base

    if variation == "I":
        verb = pick(rng, verbs)
        base = {"verb": verb}
        base.update(_draw_args(rng, lexicon.verb(verb), family))
        if has_adjuncts:
            base.update(_draw_adjuncts(rng, lexicon))
        base = finish(base)
        return [base] * 7, base

    if variation == "II":
        verb = pick(rng, verbs)
        entry = lexicon.verb(verb)
        rows = []
        for _ in range(7):
            a = {"verb": verb}
            a.update(_draw_args(rng, entry, family))
            if has_adjuncts:
                a.update(_draw_adjuncts(rng, lexicon))
            rows.append(a)
        answer = {"verb": verb}
        answer.update(_draw_args(rng, entry, family))
        if has_adjuncts:
            answer.update(_draw_adjuncts(rng, lexicon))
        answer = finish(answer)
        return rows, answer

    # Type III: full reshuffle; no content lemma repeats across rows, and
    # each answer row draws its own lexical material as well.
    n_answers = len(template.answer_rows)
    needed = 7 + (n_answers if family != "agr" else 1)
    if len(verbs) < needed:
        raise DrawError(f"type III needs {needed} distinct verbs, lexicon has {len(verbs)}")
    order = shuffled(rng, sorted(verbs))
    used = set()
    adjunct_used = set() if has_adjuncts else None

    def one(verb, needs=()):
        a = {"verb": verb}
        a.update(_draw_args(rng, lexicon.verb(verb), family, used))
        if has_adjuncts:
            # consume only the adjuncts this row realizes; the shared pools
            # are small and must cover every row distinctly
            a.update(_draw_adjuncts(rng, lexicon, adjunct_used, needs=needs))
        return a

    rows = [one(order[i], _adjunct_needs(template.context_rows[i])) for i in range(7)]
    if family == "agr":
        answer = finish(one(order[7]))
        return rows, answer
    answers = [finish(one(order[7 + j], _adjunct_needs(spec.template)))
               for j, spec in enumerate(template.answer_rows)]
    return rows, answers


def _draw_roll(template, lexicon, variation, rng):
    verbs = list(lexicon.verbs())
    if variation == "I":
        v1 = v2 = pick(rng, verbs)
    else:
        if len(verbs) < 2:
            raise DrawError("roll needs at least two verbs for type II/III")
        v1, v2 = shuffled(rng, sorted(verbs))[:2]
    # one shared pool: the paradigms must not overlap on any surface text,
    # or the answer set's paradigm contrast would collapse
    used = set()
    assignment = {"verb1": v1, "verb2": v2}
    for tag, verb in (("1", v1), ("2", v2)):
        entry = lexicon.verb(verb)
        args = _draw_args(rng, entry, "roll", used)
        for name, item in args.items():
            assignment[f"{name}{tag}"] = item
    return assignment


# ---------------------------------------------------------------------------
# Instantiation
# ---------------------------------------------------------------------------

def _seed_label(family, assignment):
    if family == "roll":
        keys = ("verb1", "agent1", "verb2", "agent2")
        parts = [assignment[k] if isinstance(assignment[k], str)
                 else assignment[k]["text"] for k in keys]
        return "/".join(parts)
    parts = [assignment["verb"]]
    for name in _core_slots(family):
        parts.append(assignment[name][_primary(family)])
    return "/".join(parts)


def instantiate(template: BlmTemplate, lexicon: Lexicon, variation: str,
                rng_seed: int, index: int = 0, seed: dict | None = None,
                instance_id: str = "") -> BlmInstance:
    """Build one puzzle instance; deterministic in (rng_seed, index)."""
    if variation not in ("I", "II", "III"):
        raise BlmError(f"unknown variation type {variation!r}")
    if lexicon.family != TASK_FAMILY[template.task]:
        raise BlmError(
            f"lexicon family {lexicon.family!r} does not serve task {template.task!r}"
        )
    family = TASK_FAMILY[template.task]
    last_error = None
    for attempt in range(MAX_REDRAWS):
        rng = substream(rng_seed, "gen", index, attempt)
        try:
            if family == "roll":
                assignment = _draw_roll(template, lexicon, variation, rng)
                rows = [assignment] * 7
                answer_assignments = [assignment] * len(template.answer_rows)
                seed_desc = _seed_label(family, assignment)
            else:
                rows, answer = _draw_plain(template, lexicon, variation, rng, seed)
                if isinstance(answer, list):
                    answer_assignments = answer
                    seed_desc = _seed_label(family, answer[0])
                else:
                    answer_assignments = [answer] * len(template.answer_rows)
                    seed_desc = _seed_label(family, answer)
            context = tuple(
                realize_row(template.context_rows[i], rows[i], lexicon, template.task)
                for i in range(7)
            )
            answers = []
            for spec, a in zip(template.answer_rows, answer_assignments):
                answers.append((realize_row(spec.template, a, lexicon, template.task),
                                spec.label))
            texts = [s.text for s, _ in answers]
            if len(set(texts)) != len(texts):
                raise DrawError("answer surface collision")
            order = [int(i) for i in rng.permutation(len(answers))]
            answers = [answers[i] for i in order]
            correct_index = next(i for i, (_, lab) in enumerate(answers)
                                 if lab == "Correct")
            instance = BlmInstance(
                task=template.task,
                language=template.language,
                variation=variation,
                context=context,
                answers=tuple(answers),
                correct_index=correct_index,
                seed_id=seed_desc,
                instance_id=instance_id or f"{template.task}.{template.language}.{variation}.{index:05d}",
            )
            instance.validate()
            return instance
        except DrawError as exc:
            # redraw with the next attempt's stream; for fixed seeds only the
            # rng-dependent parts (adjuncts, corrupted prepositions) change
            last_error = exc
            continue
    raise BlmError(
        f"instance {index}: could not draw distinct answers after "
        f"{MAX_REDRAWS} attempts ({last_error}); lexicon is degenerate"
    )


def enumerate_type1_seeds(template: BlmTemplate, lexicon: Lexicon):
    """All Type I lexical seed combinations, in deterministic order."""
    family = TASK_FAMILY[template.task]
    if family == "roll":
        raise BlmError("exhaustive enumeration is not defined for the roll template")
    seeds = []
    for verb in sorted(lexicon.verbs()):
        entry = lexicon.verb(verb)
        slot_names = _core_slots(family)
        pools = [entry["slots"][name] for name in slot_names]
        for combo in itertools.product(*pools):
            seed = {"verb": verb}
            seed.update(dict(zip(slot_names, combo)))
            seeds.append(seed)
    return seeds


def generate_dataset(template: BlmTemplate, lexicon: Lexicon, n: int | None,
                     variation: str, rng_seed: int,
                     exhaustive: bool = False) -> list:
    """Generate ``n`` instances (or every Type I seed when exhaustive)."""
    seeds = None
    if exhaustive:
        if variation != "I":
            raise BlmError("exhaustive generation is defined for Type I only")
        seeds = enumerate_type1_seeds(template, lexicon)
        n = len(seeds)
    else:
        if n is None or n < 1:
            raise BlmError("n >= 1 required")
        if variation == "I" and TASK_FAMILY[template.task] != "roll":
            # uniform coverage of the seed inventory as far as n allows
            seeds = shuffled(substream(rng_seed, "seed-order"),
                             enumerate_type1_seeds(template, lexicon))
    instances = []
    for i in range(n):
        seed = seeds[i % len(seeds)] if seeds is not None else None
        try:
            instances.append(
                instantiate(template, lexicon, variation, rng_seed, index=i, seed=seed)
            )
        except BlmError as exc:
            raise BlmError(f"generation failed at instance {i}: {exc}") from exc
    return instances


# ---------------------------------------------------------------------------
# Sentence banks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BankSentence:
    sid: str
    sentence: Sentence

    @property
    def pattern(self):
        return self.sentence.pattern


def _agr_pattern_rows(task: str):
    """Chunk templates for every well-formed agreement pattern."""
    from .core import agreement_patterns

    rows = []
    for key in agreement_patterns():
        chunks = []
        for token in key.split(" "):
            role_token, number = token.rsplit("-", 1)
            role = {"np": "subject-np", "pp1": "pp1", "pp2": "pp2", "vp": "vp"}[role_token]
            slot = {"subject-np": "subject", "pp1": "pp1", "pp2": "pp2", "vp": "verb"}[role]
            chunks.append(chunk(role, slot=slot, number=number))
        rows.append(SentenceTemplate(tuple(chunks)))
    return rows


def bank_patterns(template: BlmTemplate):
    """Distinct context-row structures available for the task's bank."""
    if template.task == "agr":
        return _agr_pattern_rows(template.task)
    seen = {}
    for row in template.context_rows:
        from .core import pattern_of
        key = pattern_of(row.chunks, template.task)
        seen.setdefault(key, row)
    return [seen[k] for k in sorted(seen)]


def build_sentence_bank(template: BlmTemplate, lexicon: Lexicon, n: int,
                        rng_seed: int) -> list:
    """``n`` sentences spread exactly uniformly over the task's patterns."""
    rows = bank_patterns(template)
    p = len(rows)
    if n % p != 0:
        raise BlmError(f"{n} not divisible by pattern count {p}")
    per = n // p
    family = TASK_FAMILY[template.task]
    out = []
    counter = 0
    for pi, row in enumerate(rows):
        for j in range(per):
            rng = substream(rng_seed, "bank", pi, j)
            if family == "roll":
                assignment = _draw_roll(template, lexicon, "I", rng)
            else:
                verb = pick(rng, list(lexicon.verbs()))
                assignment = {"verb": verb}
                assignment.update(_draw_args(rng, lexicon.verb(verb), family))
                if family == "cos-od":
                    assignment.update(_draw_adjuncts(rng, lexicon))
                if family == "spray-load":
                    assignment.update(_wrong_preps(rng, lexicon, verb))
            sentence = realize_row(row, assignment, lexicon, template.task)
            sid = f"{template.task}.{template.language}.bank.{counter:06d}"
            out.append(BankSentence(sid=sid, sentence=sentence))
            counter += 1
    return out
