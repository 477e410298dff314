import pytest
from hypothesis import given
from hypothesis import strategies as st

from acsafe.dsl import (
    export_model,
    format_command,
    format_condition,
    parse_command,
    parse_condition,
    parse_model,
    tokenize,
)
from acsafe.errors import DslError
from acsafe.models import builtin_names, load_builtin


def test_tokenize_joins_open_brackets():
    lines = tokenize("a = {x,\n  y}\nb")
    assert [[t.value for t in ln] for ln in lines] == [["a", "=", "{", "x", ",", "y", "}"], ["b"]]


def test_tokenize_primes_and_hyphens():
    (line,) = tokenize("e' fresh-0 a->b")
    assert [t.value for t in line] == ["e'", "fresh-0", "a", "->", "b"]


def test_bad_character_reports_position():
    with pytest.raises(DslError) as info:
        tokenize("ok\n  $")
    assert (info.value.line, info.value.column) == (2, 3)


@pytest.mark.parametrize("name", builtin_names())
def test_export_round_trip(name):
    m = load_builtin(name)
    again = parse_model(export_model(m))
    assert again.schema == m.schema
    assert again.ext == m.ext
    assert again.q0 == m.q0
    assert list(again.delta_scheme) == list(m.delta_scheme)


@pytest.mark.parametrize("name", ["selx", "hru", "hru_chain"])
def test_command_print_parse_identity(name):
    m = load_builtin(name)
    for cmd in m.delta_scheme:
        assert parse_command(format_command(cmd, m.schema), m.schema) == cmd


def test_wildcard_only_in_binding_positions(selx):
    with pytest.raises(DslError):
        parse_model("use selx\ncommand bad(e: entity)\nPRE:\n  e in E\nPOST:\n  cl[e] := _\n")


def test_constant_resolution(selx):
    expr = parse_condition("cl(e) = process", selx.schema, params={"e": "entity"})
    assert format_condition(expr.clauses, selx.schema) == "cl(e) = process"
    quoted = parse_condition('cl(e) = "file"', selx.schema, params={"e": "entity"})
    (clause,) = quoted.clauses
    assert clause.pattern[0].value == "file"


def test_use_only_and_override():
    m = parse_model(
        "use selx only remove\nmodel mine\ncommand remove(e: entity)\nPRE:\n  e in E\nPOST:\n  del e from E\n"
    )
    assert m.delta_scheme.ids() == ["remove"]
    assert len(m.command("remove").post) == 1


def test_state_block_replaces_q0():
    m = parse_model("use selx_onestep\nstate q:\n  E = {p1}\n")
    assert m.q0["E"] == frozenset({("p1",)})
    assert len(m.q0["cl"]) == 0


def test_ext_block_replaces_listed_only():
    m = parse_model("use selx_onestep\next:\n  P = {read, write}\n")
    assert m.ext["type_trans"] == load_builtin("selx_onestep").ext["type_trans"]
    assert len(m.ext["P"]) == 2


@pytest.mark.parametrize(
    "text",
    [
        "component X : set(nosort) dynamic ES\n",
        "sort s\ncomponent X : set(s) dynamic XX\n",
        "use nosuchmodel\n",
        "use selx\nstate q:\n  E = {(a, b)}\n",
        "use selx\ncommand c(e: entity)\nPRE:\n  e in E\nPOST:\n  add e to C\n",
    ],
)
def test_model_errors(text):
    with pytest.raises(DslError):
        parse_model(text)


names = st.sampled_from(["e", "e'", "f"])


@given(
    st.lists(
        st.one_of(
            st.tuples(st.just("in"), names),
            st.tuples(st.just("notin"), names),
            st.tuples(st.just("cl"), names, st.sampled_from(["process", '"file"', "_"])),
            st.tuples(st.just("con"), names, st.sampled_from(["u", "_"]), st.sampled_from(["r", "_"])),
        ),
        min_size=1,
        max_size=5,
    )
)
def test_parse_print_identity(selx, spec):
    """Generated clause lists survive print then parse unchanged."""
    lines = []
    for item in spec:
        if item[0] == "in":
            lines.append(f"{item[1]} in E")
        elif item[0] == "notin":
            lines.append(f"{item[1]} not in E")
        elif item[0] == "cl":
            lines.append(f"cl({item[1]}) = {item[2]}")
        else:
            lines.append(f"con({item[1]}) = ({item[2]}, {item[3]}, _)")
    params = {"e": "entity", "e'": "entity", "f": "entity"}
    try:
        expr = parse_condition("\n".join(lines), selx.schema, params=params)
    except DslError:
        return  # e.g. a pattern variable reused at a different sort
    printed = format_condition(expr.clauses, selx.schema)
    assert parse_condition(printed, selx.schema, params=params) == expr
