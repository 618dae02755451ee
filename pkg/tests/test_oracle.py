"""The independent rule-checking oracle."""

import pytest

from blmkit.core import BlmError, BlmInstance
from blmkit.generate import generate_dataset, instantiate
from blmkit.lexicon import builtin_lexicon
from blmkit.oracle import validate_instance
from blmkit.templates import builtin_template, supported_pairs


def generated(task="agr", lang="fr", variation="I", seed=7):
    template = builtin_template(task, lang)
    lex = builtin_lexicon(task, lang)
    return template, instantiate(template, lex, variation, rng_seed=seed)


def test_correct_answer_has_zero_violations():
    template, inst = generated()
    report = validate_instance(inst, template)
    check = next(a for a in report.answer_checks if a.label == "Correct")
    assert check.detected == ()
    assert check.consistent


def test_aev_detects_exactly_the_verb_mismatch():
    template, inst = generated()
    report = validate_instance(inst, template)
    check = next(a for a in report.answer_checks if a.label == "AEV")
    assert check.detected == ("agreement-verb",)
    assert check.consistent


def test_all_agreement_labels_detected_as_designed():
    template, inst = generated()
    report = validate_instance(inst, template)
    assert report.consistent
    for check in report.answer_checks:
        assert check.detected == check.designed, check.label


def test_duplicate_correct_is_flagged():
    template, inst = generated()
    # relabel one wrong answer as a second Correct
    answers = list(inst.answers)
    other = next(i for i, (_, lab) in enumerate(answers) if lab != "Correct")
    answers[other] = (answers[other][0], "Correct")
    bad = BlmInstance(task=inst.task, language=inst.language, variation=inst.variation,
                      context=inst.context, answers=tuple(answers),
                      correct_index=inst.correct_index, seed_id=inst.seed_id,
                      instance_id="hand-built")
    report = validate_instance(bad, template)
    assert "duplicate-correct" in report.structure_flags
    assert not report.consistent


def test_mislabeled_answer_is_inconsistent():
    template, inst = generated()
    answers = list(inst.answers)
    i = next(i for i, (_, lab) in enumerate(answers) if lab == "WNA")
    j = next(j for j, (_, lab) in enumerate(answers) if lab == "WN1")
    answers[i] = (answers[i][0], "WN1")
    answers[j] = (answers[j][0], "WNA")
    swapped = BlmInstance(task=inst.task, language=inst.language,
                          variation=inst.variation, context=inst.context,
                          answers=tuple(answers), correct_index=inst.correct_index,
                          instance_id="swapped")
    report = validate_instance(swapped, template)
    bad = [a.label for a in report.answer_checks if not a.consistent]
    assert sorted(bad) == ["WN1", "WNA"]


def test_tampered_context_row_fails_rule_check():
    template, inst = generated()
    # rebuild row 1 (plural subject row) with the singular-subject surface
    from blmkit.dataio import instance_to_dict, instance_from_dict
    blob = instance_to_dict(inst)
    blob["context"][1] = blob["context"][0]  # subject alternation broken
    tampered = instance_from_dict(blob)
    report = validate_instance(tampered, template)
    subject_rule = next(c for c in report.rule_checks
                        if c.name == "alternation:subject-np.number")
    assert subject_rule.row_results[1] is False
    assert not report.consistent


def test_task_mismatch_raises():
    template, inst = generated()
    other = builtin_template("cos", "en")
    with pytest.raises(BlmError):
        validate_instance(inst, other)


@pytest.mark.parametrize("task,lang", list(supported_pairs()))
def test_oracle_closure_all_tasks_types(task, lang):
    """Every generated instance passes the oracle, per task x variation."""
    template = builtin_template(task, lang)
    lex = builtin_lexicon(task, lang)
    for variation in ("I", "II", "III"):
        instances = generate_dataset(template, lex, 40, variation, rng_seed=23)
        for inst in instances:
            report = validate_instance(inst, template)
            if not report.consistent:
                bad = [(a.label, a.detected, a.designed)
                       for a in report.answer_checks if not a.consistent]
                rules = [(c.name, c.row_results) for c in report.rule_checks if not c.ok]
                pytest.fail(f"{task}/{lang}/{variation} {inst.instance_id}: "
                            f"answers {bad} rules {rules} flags {report.structure_flags}")


def test_roll_paradigm_shift_detection():
    template, inst = generated("roll", "en", "II", seed=3)
    report = validate_instance(inst, template)
    for check in report.answer_checks:
        if check.label.startswith("P"):
            assert "paradigm-shift" in check.detected, check
        else:
            assert "paradigm-shift" not in check.detected, check


def test_spray_load_role_mapping_atoms():
    template, inst = generated("spray-load-ALT-ATL", "en", "I", seed=2)
    report = validate_instance(inst, template)
    by_label = {a.label: a.detected for a in report.answer_checks}
    assert by_label["SSM-1"] == ("role-mapping:theme-agent-loc",)
    assert by_label["SSM-2"] == ("role-mapping:loc-agent-theme",)
    assert by_label["AASSM"] == ("role-mapping:theme-loc-agent",)
    assert by_label["LexPrep"] == ("wrong-preposition",)
    assert by_label["NoEmb"] == ("embedding",)


def test_cos_multi_rule_corruption_sets():
    """Several answers corrupt more than one rule at once."""
    template, inst = generated("cos", "en", "I", seed=4)
    report = validate_instance(inst, template)
    by_label = {a.label: set(a.detected) for a in report.answer_checks}
    assert by_label["IER-Pass"] == {"subject-role", "voice", "by-theme"}
    assert by_label["IR-Trans"] == {"subject-role", "transitive"}
    assert by_label["E-WrBy"] == {"by-agent"}
