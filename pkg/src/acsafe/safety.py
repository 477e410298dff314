"""Leak predicates, access control function extraction and leak-target derivation.

The predicates compare an analyzed state ``q0`` with a reachable state and
read the components by their conventional names: ``S``, ``O``, ``acm`` for
HRU-style models and ``E``, ``cl``, ``con`` for SELX-style models (the type
is the third field of a ``con`` value).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from acsafe.errors import SafetySpecError
from acsafe.logic import ConditionExpr, clause_components, clauses_of
from acsafe.schema import ELCategory

KINDS = ("r-simple", "e", "c", "t", "t-simple")

TARGET_SORT = {
    "r-simple": "right",
    "e": "entity",
    "c": "class",
    "t": "type",
    "t-simple": "type",
}

REQUIRED_COMPONENTS = {
    "r-simple": ("S", "O", "acm"),
    "e": ("E",),
    "c": ("E", "cl"),
    "t": ("E", "con"),
    "t-simple": ("E", "con"),
}

# sort of a dynamic component's values -> safety kind it hints at
KIND_BY_SORT = {"entity": "e", "class": "c", "type": "t", "right": "r-simple"}

TYPE_FIELD = 2


@dataclass(frozen=True)
class SafetySpec:
    kind: str
    target: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SafetySpecError(
                f"unknown safety kind {self.kind!r} (expected one of {', '.join(KINDS)})"
            )
        if not isinstance(self.target, str) or not self.target:
            raise SafetySpecError("safety target must be a non-empty identifier")

    @property
    def target_sort(self) -> str:
        return TARGET_SORT[self.kind]

    def __str__(self):
        return f"{self.kind}:{self.target}"


def check_spec(spec: SafetySpec, model) -> None:
    """Validate a spec against a model schema (components present, target well-sorted)."""
    schema = model.schema
    missing = [n for n in REQUIRED_COMPONENTS[spec.kind] if n not in schema]
    if missing:
        raise SafetySpecError(
            f"safety kind {spec.kind!r} needs component(s) {', '.join(missing)} "
            f"which model {model.name!r} does not declare"
        )
    sort = spec.target_sort
    if sort not in schema.sorts:
        raise SafetySpecError(f"model {model.name!r} has no sort {sort!r}")
    carrier = schema.carrier(sort)
    if carrier is not None and (spec.target,) not in model.ext[carrier.name]:
        raise SafetySpecError(
            f"unknown target {spec.target!r}: not in {carrier.name} of model {model.name!r}"
        )
    csort = schema.const_sort(spec.target)
    if csort is not None and csort != sort:
        raise SafetySpecError(f"target {spec.target!r} is a constant of sort {csort!r}")


def _need(q, *names):
    for n in names:
        if n not in q:
            raise SafetySpecError(f"state has no component {n!r}")


def r_simple_leak(q0, q1, right: str) -> bool:
    _need(q0, "S", "O", "acm")
    _need(q1, "acm")
    subjects, objects, acm0 = q0["S"], q0["O"], q0["acm"]
    for (s, o), cell in q1["acm"].items():
        if right not in cell:
            continue
        if (s,) not in subjects or (o,) not in objects or right not in acm0.get((s, o), ()):
            return True
    return False


def e_leak(q0, q1, entity: str) -> bool:
    _need(q0, "E")
    _need(q1, "E")
    return (entity,) in q1["E"] and (entity,) not in q0["E"]


def c_leak(q0, q1, cls: str) -> bool:
    _need(q0, "E", "cl")
    _need(q1, "E", "cl")
    cl0, cl1 = q0["cl"], q1["cl"]
    for key in q1["E"] & q0["E"]:
        if cl1.get(key) == (cls,) and cl0.get(key) != (cls,):
            return True
    return False


def t_leak(q0, q1, typ: str) -> bool:
    _need(q0, "E", "con")
    _need(q1, "E", "con")
    con0, con1 = q0["con"], q1["con"]
    for key in q1["E"] & q0["E"]:
        new, old = con1.get(key), con0.get(key)
        if new is None or old is None:
            continue
        if new[TYPE_FIELD] == typ and old[TYPE_FIELD] != typ:
            return True
    return False


def new_entity_with_type(q0, q1, typ: str) -> bool:
    """Some entity absent from ``q0`` carries ``typ`` in ``q1``."""
    _need(q0, "E")
    _need(q1, "E", "con")
    con1 = q1["con"]
    for key in q1["E"] - q0["E"]:
        value = con1.get(key)
        if value is not None and value[TYPE_FIELD] == typ:
            return True
    return False


def t_simple_leak(q0, q1, typ: str) -> bool:
    return t_leak(q0, q1, typ) or new_entity_with_type(q0, q1, typ)


_PREDICATES = {
    "r-simple": r_simple_leak,
    "e": e_leak,
    "c": c_leak,
    "t": t_leak,
    "t-simple": t_simple_leak,
}


def is_leaked(spec: SafetySpec, q0, q1) -> bool:
    """Whether ``q1`` witnesses unsafety of ``q0`` for ``spec``."""
    return _PREDICATES[spec.kind](q0, q1, spec.target)


# -- access control function --------------------------------------------------


@dataclass(frozen=True)
class AcfSpec:
    """Disjuncts of the access control function: one (command id, PRE) per command."""

    alternatives: tuple[tuple[str, ConditionExpr], ...] = ()
    ar_components: tuple[str, ...] = ()

    def __len__(self):
        return len(self.alternatives)

    def command_ids(self) -> list[str]:
        return [cid for cid, _ in self.alternatives]


def extract_acf(m) -> AcfSpec:
    """PREs of all commands with a clause that names an AR-tagged component."""
    ar = tuple(c.name for c in m.schema.components if c.el_category is ELCategory.AR)
    ar_set = set(ar)
    alternatives = []
    for cmd in m.delta_scheme:
        if any(set(clause_components(cl)) & ar_set for cl in clauses_of(cmd.pre)):
            alternatives.append((cmd.id, cmd.pre))
    return AcfSpec(tuple(alternatives), ar)


@dataclass(frozen=True)
class LeakGroup:
    """ACF clauses over one dynamic component, and the leak kind they suggest.

    ``clauses`` holds (command id, 1-based clause index) pairs.  ``rr_hint``
    lists relabeling-rule components whose signature mentions ``sort``; an
    empty hint means no relabeling rule can change such labels, which makes
    the kind unlikely to be reachable except through creation.
    """

    clauses: tuple[tuple[str, int], ...]
    component: str
    kind: str | None
    sort: str | None
    rr_hint: tuple[str, ...] = ()


@dataclass(frozen=True)
class LeakTargetReport:
    groups: tuple[LeakGroup, ...] = ()
    dropped: tuple[tuple[str, int], ...] = field(default=())

    def components(self) -> list[str]:
        return [g.component for g in self.groups]


def _leak_sort(comp):
    """Sort whose change the component records: set element, or first mapped value sort with a kind."""
    if comp.is_collection:
        candidates = comp.sorts
    else:
        candidates = comp.value_sorts
    for sort in candidates:
        if sort in KIND_BY_SORT:
            return sort
    return candidates[0] if candidates else None


def derive_leak_targets(acf: AcfSpec, m) -> LeakTargetReport:
    """Group ACF clauses by the dynamic component they reference.

    Clauses that only involve static components are dropped, since no state
    change can influence them.
    """
    schema = m.schema
    grouped: dict[str, list[tuple[str, int]]] = {}
    dropped = []
    for cmd_id, expr in acf.alternatives:
        for idx, clause in enumerate(clauses_of(expr), start=1):
            dyn = [n for n in clause_components(clause) if schema.component(n).dynamic]
            if not dyn:
                dropped.append((cmd_id, idx))
            for name in dyn:
                grouped.setdefault(name, []).append((cmd_id, idx))
    rr = [c for c in schema.components if c.el_category is ELCategory.RR]
    groups = []
    for comp in schema.components:
        if comp.name not in grouped:
            continue
        sort = _leak_sort(comp)
        hint = tuple(r.name for r in rr if sort in r.signature_sorts())
        groups.append(
            LeakGroup(tuple(grouped[comp.name]), comp.name, KIND_BY_SORT.get(sort), sort, hint)
        )
    return LeakTargetReport(tuple(groups), tuple(dropped))
