"""The model core: commands, transition scheme and the functions delta, delta* and lambda."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from acsafe.errors import EvalError, SchemaError
from acsafe.logic import (
    ConditionExpr,
    MapRestrict,
    Truth,
    apply_post,
    clause_components,
    eval_pre,
    variables,
)
from acsafe.schema import ELCategory, Schema
from acsafe.state import ModelState, StaticExt, check_extents, check_state


@dataclass(frozen=True)
class Command:
    id: str
    params: tuple[tuple[str, str], ...]
    pre: ConditionExpr = ConditionExpr()
    post: tuple = ()

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.params)

    def param_sort(self, name: str) -> str:
        for pname, sort in self.params:
            if pname == name:
                return sort
        raise KeyError(name)

    def binding(self, values: Sequence[str]) -> dict[str, str]:
        """Positional arguments to a binding."""
        if len(values) != len(self.params):
            raise EvalError(
                f"{self.id} takes {len(self.params)} argument(s), got {len(values)}"
            )
        return dict(zip(self.param_names, values))


@dataclass(frozen=True)
class TransitionScheme:
    """The set of commands (Delta); iteration order is declaration order."""

    commands: tuple[Command, ...] = ()
    _by_id: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        by_id = {}
        for cmd in self.commands:
            if cmd.id in by_id:
                raise SchemaError(f"duplicate command id {cmd.id!r}")
            by_id[cmd.id] = cmd
        object.__setattr__(self, "_by_id", by_id)

    def __iter__(self):
        return iter(self.commands)

    def __len__(self):
        return len(self.commands)

    def __contains__(self, cmd_id):
        return cmd_id in self._by_id

    def __getitem__(self, cmd_id) -> Command:
        try:
            return self._by_id[cmd_id]
        except KeyError:
            raise EvalError(f"unknown command {cmd_id!r}") from None

    def ids(self) -> list[str]:
        return [c.id for c in self.commands]

    def with_command(self, cmd: Command) -> "TransitionScheme":
        return TransitionScheme(self.commands + (cmd,))


@dataclass(frozen=True)
class Model:
    schema: Schema
    ext: StaticExt
    delta_scheme: TransitionScheme
    q0: ModelState
    name: str = "model"

    def __post_init__(self):
        validate_model(self)

    def command(self, cmd_id: str) -> Command:
        return self.delta_scheme[cmd_id]

    def with_q0(self, q0: ModelState) -> "Model":
        return Model(self.schema, self.ext, self.delta_scheme, q0, self.name)

    def fingerprint(self) -> str:
        from acsafe.dsl import export_model

        return hashlib.sha256(export_model(self).encode()).hexdigest()


def validate_command(schema: Schema, cmd: Command) -> None:
    """Schema checks that do not need a parser: referenced components exist, updates hit DYN only."""
    names = set(cmd.param_names)
    if len(names) != len(cmd.params):
        raise SchemaError(f"{cmd.id}: duplicate parameter name")
    for _, sort in cmd.params:
        if sort not in schema.sorts:
            raise SchemaError(f"{cmd.id}: parameter of undeclared sort {sort!r}")
    for clause in cmd.pre:
        for comp in clause_components(clause):
            schema.component(comp)
    bound = names | {v.name for v in variables(cmd.pre.clauses)}
    for clause in cmd.post:
        if isinstance(clause, Truth):
            continue
        comp = schema.component(clause.component)
        if not comp.dynamic:
            raise SchemaError(f"{cmd.id}: POST updates static component {comp.name!r}")
        if isinstance(clause, MapRestrict):
            target = schema.component(clause.to_set)
            if not target.dynamic or target.is_mapping:
                raise SchemaError(
                    f"{cmd.id}: restriction target {clause.to_set!r} is not a dynamic set"
                )
    for v in variables(cmd.post):
        if v.name not in bound:
            raise SchemaError(f"{cmd.id}: unbound variable {v.name!r} in POST")


def validate_model(m: Model) -> None:
    check_extents(m.schema, m.ext, dynamic=False)
    check_state(m.schema, m.q0, m.ext)
    for cmd in m.delta_scheme:
        validate_command(m.schema, cmd)


def _check_binding(cmd: Command, b) -> None:
    missing = [p for p in cmd.param_names if p not in b]
    if missing:
        raise EvalError(f"{cmd.id}: unbound parameter(s) {', '.join(missing)}")


def step(m: Model, q: ModelState, cmd, b) -> ModelState:
    """delta: the successor state, or ``q`` itself when PRE does not hold."""
    command = cmd if isinstance(cmd, Command) else m.command(cmd)
    _check_binding(command, b)
    ok, full = eval_pre(command.pre, q, m.ext, b)
    if not ok:
        return q
    return apply_post(command.post, q, full)


def run(m: Model, q: ModelState, inputs: Iterable) -> list[ModelState]:
    """delta*: every intermediate state (one per input), empty for an empty input."""
    trace = []
    for cmd, b in inputs:
        q = step(m, q, cmd, b)
        trace.append(q)
    return trace


def final_state(m: Model, q: ModelState, inputs: Iterable) -> ModelState:
    trace = run(m, q, inputs)
    return trace[-1] if trace else q


def decide(m: Model, q: ModelState, cmd, b) -> bool:
    """lambda: the access decision, i.e. whether PRE holds."""
    command = cmd if isinstance(cmd, Command) else m.command(cmd)
    _check_binding(command, b)
    return eval_pre(command.pre, q, m.ext, b)[0]


def el_components(m, cat) -> set[str]:
    schema = m.schema if isinstance(m, Model) else m
    cat = ELCategory(cat)
    return {c.name for c in schema.components if c.el_category is cat}
