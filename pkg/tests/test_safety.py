import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import leak_reference

from acsafe.errors import SafetySpecError
from acsafe.safety import (
    SafetySpec,
    check_spec,
    derive_leak_targets,
    extract_acf,
    is_leaked,
    new_entity_with_type,
    t_leak,
)
from acsafe.state import ModelState

KINDS = ["e", "c", "t", "t-simple"]


def selx_state(schema, labels):
    """labels: {entity: (class, type)}"""
    return ModelState.from_dict(
        schema,
        {
            "E": set(labels),
            "cl": {e: c for e, (c, _) in labels.items()},
            "con": {e: ("u", "r0", t) for e, (_, t) in labels.items()},
        },
    )


def test_spec_validation():
    with pytest.raises(SafetySpecError):
        SafetySpec("x", "t1")
    assert SafetySpec("t", "t1").target_sort == "type"
    assert SafetySpec("r-simple", "r").target_sort == "right"


def test_check_spec(onestep, hru):
    check_spec(SafetySpec("t", "t1"), onestep)
    with pytest.raises(SafetySpecError):
        check_spec(SafetySpec("t", "t9"), onestep)
    with pytest.raises(SafetySpecError):
        check_spec(SafetySpec("r-simple", "read_right"), onestep)
    with pytest.raises(SafetySpecError):
        check_spec(SafetySpec("t", "t1"), hru)


@pytest.mark.parametrize("kind", KINDS)
def test_no_change_no_leak(onestep, kind):
    assert not is_leaked(SafetySpec(kind, "t1" if kind.startswith("t") else "x"), onestep.q0, onestep.q0)


def test_no_change_no_leak_hru(hru_chain):
    assert not is_leaked(SafetySpec("r-simple", "own"), hru_chain.q0, hru_chain.q0)


def test_t_leak_on_relabel(onestep):
    q1 = selx_state(onestep.schema, {"p1": ("process", "t1"), "f1": ("file", "tf")})
    assert is_leaked(SafetySpec("t", "t1"), onestep.q0, q1)


def test_fresh_entity_t_simple_only(onestep):
    q1 = selx_state(onestep.schema, {"p1": ("process", "t0"), "f1": ("file", "tf"), "f2": ("file", "t1")})
    assert not is_leaked(SafetySpec("t", "t1"), onestep.q0, q1)
    assert is_leaked(SafetySpec("t-simple", "t1"), onestep.q0, q1)
    assert is_leaked(SafetySpec("e", "f2"), onestep.q0, q1)


def test_r_simple_cases(hru_chain):
    q0 = hru_chain.q0
    schema = hru_chain.schema
    q1 = ModelState.from_dict(schema, {"S": {"alice", "bob"}, "O": {"doc"}, "acm": {("alice", "doc"): {"own"}, ("bob", "doc"): {"read_right"}}})
    assert is_leaked(SafetySpec("r-simple", "read_right"), q0, q1)
    assert not is_leaked(SafetySpec("r-simple", "own"), q0, q1)
    # an existing right on a new subject counts
    q2 = ModelState.from_dict(schema, {"S": {"alice", "carol"}, "O": {"doc"}, "acm": {("carol", "doc"): {"own"}}})
    assert is_leaked(SafetySpec("r-simple", "own"), q0, q2)


def test_c_leak(onestep):
    q1 = selx_state(onestep.schema, {"p1": ("process", "t0"), "f1": ("process", "tf")})
    assert is_leaked(SafetySpec("c", "process"), onestep.q0, q1)
    q2 = selx_state(onestep.schema, {"p1": ("process", "t0"), "f1": ("file", "tf"), "n": ("process", "t0")})
    assert not is_leaked(SafetySpec("c", "process"), onestep.q0, q2)


def test_acf_selx(selx):
    acf = extract_acf(selx)
    assert acf.command_ids() == ["access"]
    assert acf.alternatives[0][1] == selx.command("access").pre


def test_acf_hru(hru):
    acf = extract_acf(hru)
    assert acf.command_ids() == ["delegateRead"]


def test_leak_targets_selx(selx):
    report = derive_leak_targets(extract_acf(selx), selx)
    got = [(g.component, g.kind, tuple(i for _, i in g.clauses)) for g in report.groups]
    assert got == [("E", "e", (1,)), ("cl", "c", (2, 3)), ("con", "t", (4, 5))]
    assert [i for _, i in report.dropped] == [6]
    con = report.groups[2]
    assert "type_trans" in con.rr_hint


def test_leak_targets_hru(hru):
    report = derive_leak_targets(extract_acf(hru), hru)
    assert [(g.component, g.kind) for g in report.groups] == [("acm", "r-simple")]


# -- properties ---------------------------------------------------------------------

ENTS = ["p1", "f1", "n1", "n2"]
labels = st.dictionaries(
    st.sampled_from(ENTS),
    st.tuples(st.sampled_from(["process", "file"]), st.sampled_from(["t0", "tf", "t1"])),
    max_size=4,
)


@given(a=labels, b=labels, kind=st.sampled_from(KINDS), typ=st.sampled_from(["t0", "t1"]))
def test_predicates_match_reference(onestep, a, b, kind, typ):
    q0, q1 = selx_state(onestep.schema, a), selx_state(onestep.schema, b)
    target = {"e": "n1", "c": "process"}.get(kind, typ)
    assert is_leaked(SafetySpec(kind, target), q0, q1) == leak_reference(kind, target, q0, q1)


@given(a=labels, b=labels, typ=st.sampled_from(["t0", "tf", "t1"]))
def test_t_simple_decomposition(onestep, a, b, typ):
    q0, q1 = selx_state(onestep.schema, a), selx_state(onestep.schema, b)
    lhs = is_leaked(SafetySpec("t-simple", typ), q0, q1)
    assert lhs == (t_leak(q0, q1, typ) or new_entity_with_type(q0, q1, typ))


cells = st.dictionaries(
    st.tuples(st.sampled_from(["s1", "s2"]), st.sampled_from(["o1"])),
    st.sets(st.sampled_from(["read_right", "own"])),
    max_size=2,
)


@given(a=cells, b=cells, sa=st.sets(st.sampled_from(["s1", "s2"])), sb=st.sets(st.sampled_from(["s1", "s2"])))
def test_r_simple_matches_reference(hru, a, b, sa, sb):
    q0 = ModelState.from_dict(hru.schema, {"S": sa, "O": {"o1"}, "acm": a})
    q1 = ModelState.from_dict(hru.schema, {"S": sb, "O": {"o1"}, "acm": b})
    assert is_leaked(SafetySpec("r-simple", "read_right"), q0, q1) == leak_reference("r-simple", "read_right", q0, q1)
