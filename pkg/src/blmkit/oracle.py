"""Independent rule-checking oracle for generated instances.

Implemented against the chunk annotations and surface spans only, never
against the generator's drawing logic: expected values for the missing row
are recomputed from the template's declarative rules, answers are analyzed
structurally, and the violations found are compared with the violation set
the template's design assigns to each answer label.  Multiple rules can be
corrupted at once, so violation sets, not single flags, are compared.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import BlmError, BlmInstance, BlmTemplate, Sentence
from .templates import TASK_FAMILY

ANSWER_ROW = 7  # 0-based index of the missing row a candidate answer fills


# ---------------------------------------------------------------------------
# Structural probes over one sentence's chunk specs
# ---------------------------------------------------------------------------

def _first(specs, *roles):
    for spec in specs:
        if spec.role in roles:
            return spec
    return None


def _subject_semrole(specs):
    spec = specs[0]
    if spec.role.startswith("np-"):
        return spec.role.split("-", 1)[1]
    return None


def probe(specs, name: str):
    """Evaluate a named structural probe; None when not applicable."""
    if "." in name and name.split(".", 1)[0] in ("subject-np", "pp1", "pp2", "vp"):
        role, attribute = name.split(".", 1)
        spec = _first(specs, role)
        return None if spec is None else spec.get(attribute)
    if name == "attractors.count":
        return sum(1 for s in specs if s.role in ("pp1", "pp2"))
    if name == "adjunct.prep":
        spec = _first(specs, "p-np", "by-np")
        if spec is None:
            return None
        return "p" if spec.role == "p-np" else "by"
    if name == "verb.voice":
        if _first(specs, "verb-active"):
            return "active"
        if _first(specs, "verb-passive"):
            return "passive"
        return None
    if name == "subject.semrole":
        return _subject_semrole(specs)
    if name == "active-object.semrole":
        if _first(specs, "verb-active") is None:
            return None
        for i, spec in enumerate(specs):
            if spec.role == "verb-active":
                for later in specs[i + 1:]:
                    if later.role.startswith("np-"):
                        return later.role.split("-", 1)[1]
        return None
    if name == "frame.kind":
        aux = _first(specs, "auxiliary")
        if aux is not None:
            return "do-aux" if aux.get("aux") == "did" else "be-loc"
        if _first(specs, "pp-loc"):
            return "move-loc"
        if any(s.role.startswith("np-") for s in specs[1:]):
            return "transitive"
        return None
    raise BlmError(f"unknown probe {name!r}")


def expected_at(template: BlmTemplate, probe_name: str, row: int):
    for rule in template.relational_rules:
        if rule.probe == probe_name:
            return rule.expected(row)
    return None


# ---------------------------------------------------------------------------
# Row structure signatures
# ---------------------------------------------------------------------------

def row_signature(specs, family: str):
    if family == "agr":
        return tuple((s.role, s.get("prep") or "-") for s in specs)
    return tuple((s.role, s.get("prep") or "-", s.get("aux") or "-") for s in specs)


# ---------------------------------------------------------------------------
# Violation detection per family
# ---------------------------------------------------------------------------

def _detect_agr(specs, template):
    subject = _first(specs, "subject-np")
    vp = _first(specs, "vp")
    attractors = [s for s in specs if s.role in ("pp1", "pp2")]
    atoms = set()
    if subject is None or vp is None:
        return {"malformed"}
    if any(s.get("prep") == "coord" for s in attractors):
        atoms.add("coordination")
    exp_subject = expected_at(template, "subject-np.number", ANSWER_ROW)
    exp_n1 = expected_at(template, "pp1.number", ANSWER_ROW)
    exp_n2 = expected_at(template, "pp2.number", ANSWER_ROW)
    exp_count = expected_at(template, "attractors.count", ANSWER_ROW)
    if subject.get("number") != exp_subject:
        atoms.add("wrong-subject-number")
    if exp_count is not None and len(attractors) != exp_count:
        atoms.add("wrong-attractor-count")
    verb_number = vp.get("number")
    if verb_number != subject.get("number"):
        # grammatical error: classify by which attractor the verb spuriously
        # agrees with; nominal number deviations are the realization of that
        # error, not separate sequence violations
        matching = [i for i, a in enumerate(attractors)
                    if a.get("number") == verb_number]
        if not matching:
            atoms.add("agreement-verb")
        elif matching == [0]:
            atoms.add("agreement-n1")
        elif matching == [1]:
            atoms.add("agreement-n2")
        else:
            atoms.add("agreement-ambiguous")
        return atoms
    # sequence checks apply when agreement is intact
    if "wrong-attractor-count" not in atoms:
        for i, (exp, tag) in enumerate([(exp_n1, "wrong-n1-number"),
                                        (exp_n2, "wrong-n2-number")]):
            if i < len(attractors) and exp is not None:
                if attractors[i].get("number") != exp:
                    atoms.add(tag)
    return atoms


def _post_verbal(specs):
    """(form, semrole, prep) for each argument chunk after the verb."""
    out = []
    verb_seen = False
    for spec in specs:
        if spec.role in ("verb-active", "verb-passive", "auxiliary"):
            verb_seen = True
            continue
        if not verb_seen:
            continue
        if spec.role.startswith("np-"):
            out.append(("np", spec.role.split("-", 1)[1], None))
        elif spec.role.startswith("pp-"):
            out.append(("pp", spec.role.split("-", 1)[1], spec.get("prep")))
        elif spec.role in ("p-np", "by-np"):
            out.append(("adjunct", spec.role, None))
    return out


def _detect_spray_load(specs, template):
    atoms = set()
    correct = template.correct_row.template.chunks
    exp_subject = _subject_semrole(correct)
    exp_args = _post_verbal(correct)
    subject = _subject_semrole(specs)
    args = _post_verbal(specs)
    voice = probe(specs, "verb.voice")
    if voice == "passive":
        atoms.add("voice")
    roles = (subject,) + tuple(a[1] for a in args)
    exp_roles = (exp_subject,) + tuple(a[1] for a in exp_args)
    if sorted(roles) == sorted(exp_roles) and roles != exp_roles:
        atoms.add("role-mapping:" + "-".join(roles))
    elif roles != exp_roles:
        atoms.add("malformed-roles")
    for i, (form, semrole, prep) in enumerate(args):
        exp_form = exp_args[i][0] if i < len(exp_args) else None
        if prep == "of":
            atoms.add("embedding")
        elif prep == "wrong":
            atoms.add("wrong-preposition")
        elif prep == "by" and semrole != "agent":
            atoms.add("wrong-preposition")
        if form == "np" and exp_form == "pp":
            atoms.add("bare-np-argument")
        elif form == "pp" and exp_form == "np":
            atoms.add("pp-argument")
    return atoms


def _detect_cos_od(specs, template):
    atoms = set()
    correct = template.correct_row.template.chunks
    exp_subject = _subject_semrole(correct)
    subject = _subject_semrole(specs)
    if subject != exp_subject:
        atoms.add("subject-role")
    if probe(specs, "verb.voice") == "passive":
        atoms.add("voice")
    has_object = False
    for form, semrole, prep in _post_verbal(specs):
        if form == "np":
            has_object = True
        elif form == "pp" and prep == "by":
            atoms.add(f"by-{semrole}")
        elif form == "adjunct" and semrole == "p-np":
            atoms.add("wrong-adjunct")
    if has_object:
        atoms.add("transitive")
    return atoms


def _roll_paradigm_texts(instance: BlmInstance, template: BlmTemplate):
    """Lowercased content spans per paradigm, read off the context rows."""
    split_at = template.paradigm_break
    par = ({"texts": set()}, {"texts": set()})
    for i, sentence in enumerate(instance.context):
        side = 0 if i < split_at else 1
        for spec, span in sentence.chunks:
            if spec.role.startswith("np-") or spec.role == "pp-loc":
                if spec.get("pro") == "it":
                    continue
                par[side]["texts"].add(span.lower())
    return par[0]["texts"], par[1]["texts"]


def _detect_roll(specs, template, sentence: Sentence, instance: BlmInstance):
    atoms = set()
    subject = _subject_semrole(specs)
    aux = _first(specs, "auxiliary")
    args = _post_verbal(specs)
    structure_change = False
    if aux is not None and aux.get("aux") == "was":
        structure_change = True
    object_np = next((a for a in args if a[0] == "np"), None)
    loc_pp = next((a for a in args if a[0] == "pp" and a[1] == "loc"), None)
    if object_np is not None:
        structure_change = True
        if subject == "theme" and object_np[1] == "agent":
            atoms.add("role-swap")
    if structure_change:
        atoms.add("structure-change")
    if (loc_pp is not None or aux is not None) and subject == "agent":
        atoms.add("role-error")
    par1, par2 = _roll_paradigm_texts(instance, template)
    subject_span = sentence.chunks[0][1].lower()
    if subject_span in par1 and subject_span not in par2:
        atoms.add("paradigm-shift")
    return atoms


def detect_violations(instance: BlmInstance, template: BlmTemplate,
                      sentence: Sentence):
    family = TASK_FAMILY[template.task]
    specs = sentence.specs()
    if family == "agr":
        return _detect_agr(specs, template)
    if family == "spray-load":
        return _detect_spray_load(specs, template)
    if family == "cos-od":
        return _detect_cos_od(specs, template)
    return _detect_roll(specs, template, sentence, instance)


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RuleCheck:
    name: str
    row_results: tuple  # per context row: True/False/None (not applicable)

    @property
    def ok(self) -> bool:
        return all(r is not False for r in self.row_results)


@dataclass(frozen=True)
class AnswerCheck:
    label: str
    detected: tuple
    designed: tuple
    consistent: bool


@dataclass(frozen=True)
class RuleReport:
    task: str
    instance_id: str
    rule_checks: tuple
    answer_checks: tuple
    structure_flags: tuple = ()

    @property
    def context_ok(self) -> bool:
        return all(c.ok for c in self.rule_checks)

    @property
    def answers_ok(self) -> bool:
        return all(a.consistent for a in self.answer_checks)

    @property
    def consistent(self) -> bool:
        return self.context_ok and self.answers_ok and not self.structure_flags


def _structure_flags(instance: BlmInstance, template: BlmTemplate):
    flags = []
    if len(instance.context) != 7:
        flags.append("context-length")
    if len(instance.answers) != len(template.answer_rows):
        flags.append("answer-count")
    labels = instance.labels()
    n_correct = labels.count("Correct")
    if n_correct != 1:
        flags.append("duplicate-correct" if n_correct > 1 else "missing-correct")
    elif labels[instance.correct_index] != "Correct":
        flags.append("correct-index-mismatch")
    texts = [s.text for s, _ in instance.answers]
    if len(set(texts)) != len(texts):
        flags.append("answer-text-collision")
    return tuple(flags)


def _roll_coherence(instance: BlmInstance, template: BlmTemplate):
    """Within each paradigm the same participants recur; check via spans."""
    results = []
    split_at = template.paradigm_break
    for base in (0, split_at):
        rows = instance.context[base:base + split_at]
        spans = []
        for s in rows:
            spans.append({spec.slot: span.lower() for spec, span in s.chunks
                          if spec.get("pro") != "it"})
        ok = True
        for a in spans:
            for b in spans:
                for slot in set(a) & set(b):
                    if a[slot] != b[slot]:
                        ok = False
        results.append(ok)
    return results


def validate_instance(instance: BlmInstance, template: BlmTemplate) -> RuleReport:
    """Check the context against every relational rule and each answer's
    structure against its label's designed violation set."""
    if instance.task != template.task:
        raise BlmError(
            f"instance task {instance.task!r} does not match template {template.task!r}"
        )
    family = TASK_FAMILY[template.task]
    checks = []
    # declarative cross-row rules
    for rule in template.relational_rules:
        rows = []
        for i, sentence in enumerate(instance.context):
            exp = rule.expected(i)
            got = probe(sentence.specs(), rule.probe)
            if exp is None or got is None:
                rows.append(None)
            else:
                rows.append(got == exp)
        checks.append(RuleCheck(name=f"{rule.kind}:{rule.probe}", row_results=tuple(rows)))
    # per-row structural signature against the template
    sig_rows = []
    for i, sentence in enumerate(instance.context):
        want = row_signature(template.context_rows[i].chunks, family)
        got = row_signature(sentence.specs(), family)
        sig_rows.append(got == want)
    checks.append(RuleCheck(name="row-structure", row_results=tuple(sig_rows)))
    # within-sentence agreement is a rule of the agreement task
    if family == "agr":
        rows = []
        for sentence in instance.context:
            specs = sentence.specs()
            subject = _first(specs, "subject-np")
            vp = _first(specs, "vp")
            rows.append(subject is not None and vp is not None
                        and subject.get("number") == vp.get("number"))
        checks.append(RuleCheck(name="subject-verb-agreement", row_results=tuple(rows)))
    if family == "roll":
        checks.append(RuleCheck(name="paradigm-lexeme-coherence",
                                row_results=tuple(_roll_coherence(instance, template))))

    designed_by_label = {a.label: a.violations for a in template.answer_rows}
    answer_checks = []
    for sentence, label in instance.answers:
        designed = designed_by_label.get(label)
        if designed is None:
            answer_checks.append(AnswerCheck(label=label, detected=("unknown-label",),
                                             designed=(), consistent=False))
            continue
        detected = detect_violations(instance, template, sentence)
        consistent = detected == set(designed)
        answer_checks.append(AnswerCheck(
            label=label,
            detected=tuple(sorted(detected)),
            designed=tuple(sorted(designed)),
            consistent=consistent,
        ))
    return RuleReport(
        task=instance.task,
        instance_id=instance.instance_id,
        rule_checks=tuple(checks),
        answer_checks=tuple(answer_checks),
        structure_flags=_structure_flags(instance, template),
    )
