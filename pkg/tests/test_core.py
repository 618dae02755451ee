"""Core data model: pattern keys, chunk specs, instance invariants."""

import itertools

import pytest
from hypothesis import given, strategies as st

from blmkit.core import (
    ANSWER_SET_SIZES,
    BlmError,
    BlmInstance,
    Sentence,
    SentenceTemplate,
    UnknownRoleError,
    agreement_patterns,
    chunk,
    make_sentence,
    pattern_of,
)


def agr_chunks(*tokens):
    role_map = {"np": "subject-np", "pp1": "pp1", "pp2": "pp2", "vp": "vp"}
    return [chunk(role_map[r], number=n) for r, n in tokens]


def test_pattern_of_attractor_example():
    # one intervening attractor: "The computer with the program is broken"
    chunks = agr_chunks(("np", "sg"), ("pp1", "sg"), ("vp", "sg"))
    assert pattern_of(chunks, "agr") == "np-sg pp1-sg vp-sg"


def test_pattern_of_minimal_structure():
    chunks = agr_chunks(("np", "sg"), ("vp", "sg"))
    assert pattern_of(chunks, "agr") == "np-sg vp-sg"


def test_pattern_of_is_pure():
    chunks = agr_chunks(("np", "pl"), ("pp1", "sg"), ("pp2", "sg"), ("vp", "pl"))
    keys = {pattern_of(chunks, "agr") for _ in range(10)}
    assert keys == {"np-pl pp1-sg pp2-sg vp-pl"}


def test_agreement_pattern_count_is_14_by_enumeration():
    # independent brute force: structures {NP VP, NP PP1 VP, NP PP1 PP2 VP}
    # crossed with number assignments under subject-verb match
    keys = set()
    for n_attr in (0, 1, 2):
        for subj in ("sg", "pl"):
            for assignment in itertools.product(("sg", "pl"), repeat=n_attr):
                tokens = [("np", subj)]
                tokens += [(("pp1", "pp2")[i], num) for i, num in enumerate(assignment)]
                tokens.append(("vp", subj))
                keys.add(pattern_of(agr_chunks(*tokens), "agr"))
    assert len(keys) == 2 + 4 + 8 == 14
    assert keys == set(agreement_patterns())


def test_pattern_of_unknown_role_is_structured_error():
    with pytest.raises(UnknownRoleError) as err:
        pattern_of([chunk("np-agent")], "agr")
    assert "np-agent" in str(err.value) and "agr" in str(err.value)


def test_pattern_of_rejects_empty_and_bad_task():
    with pytest.raises(BlmError):
        pattern_of([], "agr")
    with pytest.raises(BlmError):
        pattern_of(agr_chunks(("np", "sg")), "nope")


def test_alternation_pattern_tokens():
    chunks = [chunk("np-agent"), chunk("verb-active"), chunk("np-theme"),
              chunk("pp-loc", prep="lex")]
    assert pattern_of(chunks, "spray-load-ATL-ALT") == "np-agent v-act np-theme pp-loc"
    chunks = [chunk("np-theme"), chunk("verb-passive"), chunk("by-np")]
    assert pattern_of(chunks, "cos") == "np-theme v-pass by-np"


def test_chunkspec_features_sorted_and_frozen():
    spec = chunk("pp1", number="sg", prep="coord")
    assert spec.get("number") == "sg"
    assert spec.get("prep") == "coord"
    assert spec.get("missing") is None
    assert spec.features == (("number", "sg"), ("prep", "coord"))
    with pytest.raises(Exception):
        spec.role = "pp2"


def test_sentence_span_invariant():
    specs = agr_chunks(("np", "sg"), ("vp", "sg"))
    sentence = make_sentence([(specs[0], "the computer"), (specs[1], "is broken")], "agr")
    assert sentence.text == "The computer is broken"
    with pytest.raises(BlmError):
        Sentence(text="mismatch", chunks=sentence.chunks, pattern=sentence.pattern)


def test_sentence_template_validation():
    with pytest.raises(BlmError):
        SentenceTemplate(chunks=())
    with pytest.raises(BlmError):
        SentenceTemplate(chunks=(chunk("vp", number="sg"),), clause_type="weird")


def _tiny_instance(labels, correct_index):
    sentences = []
    for i, lab in enumerate(labels):
        spec = chunk("subject-np", number="sg")
        vp = chunk("vp", number="sg")
        sentences.append(make_sentence([(spec, f"the item {i}"), (vp, "is here")], "agr"))
    ctx = [make_sentence([(chunk("subject-np", number="sg"), f"ctx {i}"),
                          (chunk("vp", number="sg"), "is here")], "agr")
           for i in range(7)]
    return BlmInstance(task="agr", language="en", variation="I",
                       context=tuple(ctx),
                       answers=tuple(zip(sentences, labels)),
                       correct_index=correct_index)


def test_instance_validation_catches_violations():
    labels = ["Correct", "Coord", "WNA", "WN1", "WN2", "AEV", "AEN1", "AEN2"]
    inst = _tiny_instance(labels, 0)
    inst.validate()
    with pytest.raises(BlmError):
        _tiny_instance(labels, 1).validate()  # index not pointing at Correct
    with pytest.raises(BlmError):
        _tiny_instance(["Correct"] * 2 + labels[2:], 0).validate()
    with pytest.raises(BlmError):
        _tiny_instance(labels[:-1] + ["NotALabel"], 0).validate()


def test_answer_set_sizes_match_tasks():
    assert ANSWER_SET_SIZES == {
        "agr": 8, "spray-load-ALT-ATL": 9, "spray-load-ATL-ALT": 9,
        "cos": 8, "od": 8, "roll": 7,
    }


@given(st.lists(st.sampled_from(["sg", "pl"]), min_size=1, max_size=2),
       st.sampled_from(["sg", "pl"]))
def test_pattern_of_deterministic_property(attractors, subj):
    tokens = [("np", subj)]
    tokens += [(("pp1", "pp2")[i], n) for i, n in enumerate(attractors)]
    tokens.append(("vp", subj))
    chunks = agr_chunks(*tokens)
    assert pattern_of(chunks, "agr") == pattern_of(list(chunks), "agr")
