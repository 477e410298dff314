import pytest

from acsafe.core import step
from acsafe.errors import SchemaError
from acsafe.logic import (
    ConditionExpr,
    Const,
    Containment,
    MapRestrict,
    MapUpdate,
    MappingMatch,
    Membership,
    RelationMembership,
    SetDelete,
    SetInsert,
    Var,
    Wildcard,
)
from acsafe.models import build_hru, build_selx, find_model, hru_model, load_builtin, selx_model
from acsafe.schema import ELCategory

E, C, U, R, T, P = "entity", "class", "user", "role", "type", "perm"


def v(name, sort):
    return Var(name, sort)


GOLDEN_PRE = {
    "create": (
        Membership(((v("e", E),),), "E"),
        Membership(((v("e'", E),),), "E", negated=True),
        Membership(((v("c'", C),),), "C"),
        MappingMatch("con", (v("e", E),), (v("u", U), v("r", R), v("t", T))),
    ),
    "remove": (Membership(((v("e", E),),), "E"),),
    "relabel": (
        Membership(((v("e", E),),), "E"),
        MappingMatch("cl", (v("e", E),), (Const("process", C),)),
        MappingMatch("con", (v("e", E),), (v("u", U), v("r", R), v("t", T))),
        MappingMatch("con", (v("f", E),), (Wildcard(U), Wildcard(R), v("tf", T))),
        RelationMembership("role_trans", (v("r", R), v("r'", R))),
        RelationMembership("type_trans", (v("t", T), v("tf", T), v("t'", T))),
    ),
    "access": (
        Membership(((v("e", E),), (v("e'", E),)), "E"),
        MappingMatch("cl", (v("e", E),), (Const("process", C),)),
        MappingMatch("cl", (v("e'", E),), (v("c'", C),)),
        MappingMatch("con", (v("e", E),), (Wildcard(U), Wildcard(R), v("t", T))),
        MappingMatch("con", (v("e'", E),), (Wildcard(U), Wildcard(R), v("t'", T))),
        Containment(v("p", P), "allow", (v("t", T), v("t'", T), v("c'", C))),
    ),
}

GOLDEN_POST = {
    "create": (
        SetInsert("E", (v("e'", E),)),
        MapUpdate("cl", (v("e'", E),), (v("c'", C),)),
        MapUpdate("con", (v("e'", E),), (v("u", U), v("r", R), v("t", T))),
    ),
    "remove": (SetDelete("E", (v("e", E),)), MapRestrict("cl", "E"), MapRestrict("con", "E")),
    "relabel": (MapUpdate("con", (v("e", E),), (v("u", U), v("r'", R), v("t'", T))),),
    "access": (),  # POST: true is the empty conjunction
}

TABLE = {
    "C": ELCategory.LS, "U": ELCategory.LS, "R": ELCategory.LS, "T": ELCategory.LS,
    "role_trans": ELCategory.RR, "type_trans": ELCategory.RR,
    "E": ELCategory.ES, "cl": ELCategory.LA, "con": ELCategory.LA,
    "P": ELCategory.AR, "allow": ELCategory.AR,
}


@pytest.mark.parametrize("name", ["create", "remove", "relabel", "access"])
def test_selx_commands_golden(selx, name):
    cmd = selx.command(name)
    assert cmd.pre == ConditionExpr(GOLDEN_PRE[name])
    assert tuple(cmd.post) == GOLDEN_POST[name]


def test_selx_params(selx):
    assert selx.command("create").params == (("e", E), ("e'", E), ("c'", C))
    assert selx.command("relabel").params == (("e", E), ("f", E), ("r'", R), ("t'", T))
    assert selx.command("access").params == (("e", E), ("e'", E), ("p", P))


def test_selx_el_tags(selx):
    assert {c.name: c.el_category for c in selx.schema.components} == TABLE
    assert {c.name for c in selx.schema.dynamic} == {"E", "cl", "con"}


def test_hru_shape(hru):
    assert hru.delta_scheme.ids() == ["delegateRead"]
    assert hru.command("delegateRead").params == (("s1", "subject"), ("s2", "subject"), ("o", "object"))
    assert {c.name for c in hru.schema.dynamic} == {"S", "O", "acm"}
    assert {c.name for c in hru.schema.static} == {"R"}


def test_build_hru_extra_command():
    m = build_hru(
        rights=["own"],
        commands="command createSubject(s: subject)\nPRE:\n  s not in S\nPOST:\n  add s to S\n",
    )
    assert sorted(m.delta_scheme.ids()) == ["createSubject", "delegateRead"]
    assert ("own",) in m.ext["R"]


def test_build_hru_empty_extra():
    assert build_hru().delta_scheme.ids() == ["delegateRead"]


def selx_ext(**over):
    base = {
        "C": {"process", "file"}, "U": {"u"}, "R": {"r0"}, "T": {"t0", "t1"},
        "role_trans": set(), "type_trans": set(), "P": {"read"}, "allow": {},
    }
    base.update(over)
    return base


def test_build_selx_ok():
    m = build_selx(selx_ext(type_trans={("t0", "t0", "t1")}))
    assert m.delta_scheme.ids() == ["create", "remove", "relabel", "access"]


@pytest.mark.parametrize(
    "over",
    [
        {"C": {"file"}},
        {"allow": {("t0", "t9", "file"): {"read"}}},
        {"allow": {("t0", "t0", "file"): {"write"}}},
        {"type_trans": {("t0", "t9", "t1")}},
        {"role_trans": {("r0", "r9")}},
    ],
)
def test_build_selx_rejects(over):
    with pytest.raises(SchemaError):
        build_selx(selx_ext(**over))


def test_access_never_changes_state(onestep):
    for e in ("p1", "f1", "x"):
        for e2 in ("p1", "f1"):
            assert step(onestep, onestep.q0, "access", {"e": e, "e'": e2, "p": "read"}) == onestep.q0


def test_remove_then_recreate_takes_creator_labels(onestep):
    q = step(onestep, onestep.q0, "remove", {"e": "f1"})
    q = step(onestep, q, "create", {"e": "p1", "e'": "f1", "c'": "file"})
    assert ("f1",) in q["E"]
    assert q["con"][("f1",)] == ("u", "r0", "t0")
    assert q["con"][("f1",)] != onestep.q0["con"][("f1",)]


def test_find_model(tmp_path, monkeypatch):
    assert find_model("selx").name == "selx"
    (tmp_path / "mine.acm").write_text("use selx\nmodel mine\n")
    monkeypatch.setenv("ACSAFE_MODEL_PATH", str(tmp_path))
    assert find_model("mine").name == "mine"
    assert find_model(str(tmp_path / "mine.acm")).name == "mine"
    with pytest.raises(Exception):
        find_model("does-not-exist")


def test_builders_cached():
    assert selx_model() is load_builtin("selx")
    assert hru_model() is load_builtin("hru")
