"""Command dependency graph (CDG) assembly and the model-specific hooks it uses.

A CDG edge ``(c, v)`` records that ``c`` may establish part of the
precondition of ``v``.  Two virtual commands frame the graph: the source
encodes the analyzed state in its POST, the sink encodes the leak condition
in its PRE.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from acsafe.core import Command, TransitionScheme
from acsafe.errors import HookError
from acsafe.logic import (
    CellUnion,
    ConditionExpr,
    Const,
    Containment,
    MapUpdate,
    MappingMatch,
    Membership,
    SetInsert,
    Var,
    Wildcard,
    clauses_of,
    footprint,
    terms_unify,
)
from acsafe.safety import TYPE_FIELD, SafetySpec, check_spec, is_leaked

SOURCE_ID = "virtualSourceCmd"
SINK_ID = "virtualSinkCmd"


@dataclass(frozen=True)
class HookSet:
    """The model-specific operations an analysis is parameterized by.

    * ``build_pred_set(delta, c)``: commands of ``delta`` that ``c`` depends on
    * ``create_cdg_source(q)``: the virtual source command for state ``q``
    * ``create_cdg_sink(spec)``: the virtual sink command for the leak target
    * ``is_leaked(spec, q0, q)``: the leak predicate
    * ``assign_params(model, q, path, rng, ...)``: bindings for a CDG path
    """

    build_pred_set: Callable
    create_cdg_source: Callable
    create_cdg_sink: Callable
    is_leaked: Callable
    assign_params: Callable

    def check(self):
        for name in ("build_pred_set", "create_cdg_source", "create_cdg_sink", "is_leaked", "assign_params"):
            if not callable(getattr(self, name)):
                raise HookError(f"hook {name!r} is missing")


@dataclass(frozen=True)
class CDG:
    """Vertices in insertion order; edges as (predecessor id, successor id)."""

    vertices: tuple[Command, ...]
    edges: frozenset
    source: Command
    sink: Command
    delta: TransitionScheme = field(repr=False)

    def ids(self) -> list[str]:
        return [v.id for v in self.vertices]

    def __contains__(self, cmd_id) -> bool:
        return any(v.id == cmd_id for v in self.vertices)

    def vertex(self, cmd_id) -> Command:
        for v in self.vertices:
            if v.id == cmd_id:
                return v
        raise KeyError(cmd_id)

    def successors(self, cmd_id) -> list[str]:
        return sorted(b for a, b in self.edges if a == cmd_id)

    def predecessors(self, cmd_id) -> list[str]:
        return sorted(a for a, b in self.edges if b == cmd_id)

    def in_degree(self, cmd_id) -> int:
        return sum(1 for _, b in self.edges if b == cmd_id)

    def out_degree(self, cmd_id) -> int:
        return sum(1 for a, _ in self.edges if a == cmd_id)

    def sorted_edges(self) -> list[tuple[str, str]]:
        order = {c.id: i for i, c in enumerate(self._display_order())}
        return sorted(self.edges, key=lambda e: (order.get(e[0], -1), order.get(e[1], -1)))

    def _display_order(self) -> list[Command]:
        out = [self.source]
        out += [c for c in self.delta if c.id != SOURCE_ID]
        out.append(self.sink)
        return out

    def to_dot(self, name="cdg") -> str:
        """DOT text: every command of the scheme plus both virtual vertices.

        Commands outside the graph (no dependency path to the sink) are drawn
        dotted.
        """
        in_graph = {v.id for v in self.vertices}
        lines = [f'digraph "{name}" {{', "  rankdir=LR;", "  node [shape=box];"]
        for c in self._display_order():
            attrs = [f'label="{c.id}"']
            if c.id == SOURCE_ID:
                attrs += ["shape=ellipse", "style=filled", 'fillcolor="lightblue"']
            elif c.id == SINK_ID:
                attrs += ["shape=doubleoctagon", "style=filled", 'fillcolor="salmon"']
            elif c.id not in in_graph:
                attrs.append("style=dotted")
            lines.append(f'  "{c.id}" [{", ".join(attrs)}];')
        for a, b in self.sorted_edges():
            lines.append(f'  "{a}" -> "{b}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def cdg_assembly(delta: TransitionScheme, q, target: SafetySpec, hooks: HookSet):
    """Build the CDG backwards from the sink; returns ``(cdg, c_q)``."""
    hooks.check()
    c_q = hooks.create_cdg_source(q)
    c_target = hooks.create_cdg_sink(target)
    for cid in (SOURCE_ID, SINK_ID):
        if cid in delta:
            raise HookError(f"command id {cid!r} is reserved")
    delta = delta.with_command(c_q)
    vertices: dict[str, Command] = {c_target.id: c_target}
    edges: set[tuple[str, str]] = set()

    def predecessors(v: Command):
        for c in hooks.build_pred_set(delta, v):
            if c.id not in vertices:
                vertices[c.id] = c
                predecessors(c)
            edges.add((c.id, v.id))

    predecessors(c_target)
    graph = CDG(tuple(vertices.values()), frozenset(edges), c_q, c_target, delta)
    return graph, c_q


# -- generic syntactic dependency --------------------------------------------


def _writes(cmd: Command):
    return [fp for clause in cmd.post for fp in footprint(clause)]


def _reads(cmd: Command):
    return [fp for clause in clauses_of(cmd.pre) for fp in footprint(clause)]


def _compatible(write, read) -> bool:
    (wcomp, wterms), (rcomp, rterms) = write, read
    if wcomp != rcomp:
        return False
    if wterms is None or rterms is None:
        return True
    return terms_unify(wterms, rterms)


def generic_build_pred_set(delta, c: Command) -> list[Command]:
    """Commands with a POST clause and ``c`` with a PRE clause over the same component, unifiable terms."""
    reads = _reads(c)
    out = []
    for cand in delta:
        if any(_compatible(w, r) for w in _writes(cand) for r in reads):
            out.append(cand)
    return out


# -- HRU ------------------------------------------------------------------------


def hru_build_pred_set(delta, c: Command, acm="acm") -> list[Command]:
    """Commands entering a right into ``acm`` that PRE(c) requires somewhere."""
    required = [
        cl.element for cl in clauses_of(c.pre) if isinstance(cl, Containment) and cl.component == acm
    ]
    if not required:
        return []
    out = []
    for cand in delta:
        entered = [cl.element for cl in cand.post if isinstance(cl, CellUnion) and cl.component == acm]
        if any(terms_unify((e,), (r,)) for e in entered for r in required):
            out.append(cand)
    return out


def hru_create_cdg_source(q) -> Command:
    """POST adds every subject, object and matrix entry of ``q``."""
    post = []
    for (s,) in sorted(q["S"]):
        post.append(SetInsert("S", (Const(s, "subject"),)))
    for (o,) in sorted(q["O"]):
        post.append(SetInsert("O", (Const(o, "object"),)))
    for (s, o), cell in sorted(q["acm"].items()):
        for r in sorted(cell):
            post.append(
                CellUnion("acm", (Const(s, "subject"), Const(o, "object")), Const(r, "right"))
            )
    return Command(SOURCE_ID, (), ConditionExpr(), tuple(post))


def hru_create_cdg_sink(spec: SafetySpec) -> Command:
    """PRE: the target right is present in some matrix cell."""
    pre = Containment(Const(spec.target, "right"), "acm", (Wildcard("subject"), Wildcard("object")))
    return Command(SINK_ID, (), ConditionExpr((pre,)), ())


# -- SELX -----------------------------------------------------------------------


def _con_type(terms):
    return terms[TYPE_FIELD] if len(terms) > TYPE_FIELD else None


def selx_t_build_pred_set(delta, c: Command) -> list[Command]:
    """Commands whose POST assigns, via ``con``, a type that PRE(c) matches on."""
    tdep = [
        _con_type(cl.pattern)
        for cl in clauses_of(c.pre)
        if isinstance(cl, MappingMatch) and cl.component == "con"
    ]
    tdep = [t for t in tdep if t is not None]
    out = []
    for cand in delta:
        for psi in cand.post:
            if isinstance(psi, MapUpdate) and psi.component == "con":
                t = _con_type(psi.value)
                if t is not None and any(terms_unify((t,), (d,)) for d in tdep):
                    out.append(cand)
                    break
    return out


def selx_create_cdg_source(q) -> Command:
    """PRE true; POST re-creates every entity of ``q`` with its class and context."""
    post = []
    cl, con = q["cl"], q["con"]
    for key in sorted(q["E"]):
        e = Const(key[0], "entity")
        post.append(SetInsert("E", (e,)))
        if key in cl:
            post.append(MapUpdate("cl", (e,), (Const(cl[key][0], "class"),)))
        if key in con:
            u, r, t = con[key]
            post.append(
                MapUpdate("con", (e,), (Const(u, "user"), Const(r, "role"), Const(t, "type")))
            )
    return Command(SOURCE_ID, (), ConditionExpr(), tuple(post))


def _exists_entity(*clauses) -> ConditionExpr:
    return ConditionExpr((Membership(((Var("e", "entity"),),), "E"),) + clauses)


def selx_t_create_cdg_sink(spec: SafetySpec) -> Command:
    """PRE: some entity in E has the target type."""
    match = MappingMatch(
        "con",
        (Var("e", "entity"),),
        (Wildcard("user"), Wildcard("role"), Const(spec.target, "type")),
    )
    return Command(SINK_ID, (), _exists_entity(match), ())


def selx_c_create_cdg_sink(spec: SafetySpec) -> Command:
    match = MappingMatch("cl", (Var("e", "entity"),), (Const(spec.target, "class"),))
    return Command(SINK_ID, (), _exists_entity(match), ())


def selx_e_create_cdg_sink(spec: SafetySpec) -> Command:
    pre = Membership(((Const(spec.target, "entity"),),), "E")
    return Command(SINK_ID, (), ConditionExpr((pre,)), ())


# -- selection ------------------------------------------------------------------


def _assign_params_default():
    from acsafe.search import assign_params

    return assign_params


def _family(model) -> str | None:
    names = {c.name for c in model.schema.components}
    if {"E", "cl", "con"} <= names:
        return "selx"
    if {"S", "O", "acm"} <= names:
        return "hru"
    return None


def hooks_for(model, spec: SafetySpec) -> HookSet:
    """The bundled hook implementations for a (model, safety kind) pair."""
    family = _family(model)
    check_spec(spec, model)
    assign = _assign_params_default()
    if family == "hru" and spec.kind == "r-simple":
        return HookSet(hru_build_pred_set, hru_create_cdg_source, hru_create_cdg_sink, is_leaked, assign)
    if family == "selx" and spec.kind in ("t", "t-simple"):
        return HookSet(
            selx_t_build_pred_set, selx_create_cdg_source, selx_t_create_cdg_sink, is_leaked, assign
        )
    if family == "selx" and spec.kind == "c":
        return HookSet(
            generic_build_pred_set, selx_create_cdg_source, selx_c_create_cdg_sink, is_leaked, assign
        )
    if family == "selx" and spec.kind == "e":
        return HookSet(
            generic_build_pred_set, selx_create_cdg_source, selx_e_create_cdg_sink, is_leaked, assign
        )
    raise HookError(
        f"no analysis hooks for safety kind {spec.kind!r} on model {model.name!r}"
    )


def justify_edge(c1: Command, c2: Command) -> bool:
    """Some POST clause of ``c1`` and PRE clause of ``c2`` touch the same component with unifiable terms."""
    return any(_compatible(w, r) for w in _writes(c1) for r in _reads(c2))


__all__ = [
    "CDG",
    "HookSet",
    "SINK_ID",
    "SOURCE_ID",
    "cdg_assembly",
    "generic_build_pred_set",
    "hooks_for",
    "hru_build_pred_set",
    "hru_create_cdg_sink",
    "hru_create_cdg_source",
    "justify_edge",
    "selx_c_create_cdg_sink",
    "selx_create_cdg_source",
    "selx_e_create_cdg_sink",
    "selx_t_build_pred_set",
    "selx_t_create_cdg_sink",
]
