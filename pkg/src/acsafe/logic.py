"""Condition language for PRE / POST of commands.

A precondition is a conjunction of atomic clauses.  Evaluation is a small
conjunctive query: clauses are processed in order and clauses with unbound
variables enumerate candidate values from the extents they range over
(pattern matching), so ``con(e) = (u, r, t)`` binds ``u``, ``r`` and ``t``.
Candidates are tried in sorted order, which makes evaluation deterministic.

Postconditions are ordered lists of updates applied to a copy of the state;
components that no update names keep their extent (frame rule).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from acsafe.errors import EvalError
from acsafe.state import Extents, FrozenMap, ModelState, StaticExt

# -- terms -------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: str
    sort: str


@dataclass(frozen=True)
class Var:
    name: str
    sort: str


@dataclass(frozen=True)
class Wildcard:
    sort: str


Term = Union[Const, Var, Wildcard]


# -- precondition clauses ----------------------------------------------------


@dataclass(frozen=True)
class Truth:
    pass


TRUTH = Truth()


@dataclass(frozen=True)
class Membership:
    """``x in E`` / ``x not in E`` / ``{x, y} subset E`` for set components.

    ``elements`` holds one term tuple per member; the clause is satisfied iff
    every element is (``negated``: none is) in the set.
    """

    elements: tuple[tuple[Term, ...], ...]
    component: str
    negated: bool = False


@dataclass(frozen=True)
class MappingMatch:
    """``f(key) = pattern``; fails when ``key`` is outside the mapping's domain."""

    component: str
    key: tuple[Term, ...]
    pattern: tuple[Term, ...]


@dataclass(frozen=True)
class RelationMembership:
    """``(a, b, ...) in rel`` for relation components."""

    component: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class Containment:
    """``x in f(key)`` for set-valued mappings."""

    element: Term
    component: str
    key: tuple[Term, ...]


AtomicClause = Union[Truth, Membership, MappingMatch, RelationMembership, Containment]


@dataclass(frozen=True)
class ConditionExpr:
    clauses: tuple[AtomicClause, ...] = (TRUTH,)

    def __iter__(self):
        return iter(self.clauses)

    def __len__(self):
        return len(self.clauses)


# -- postcondition clauses ---------------------------------------------------


@dataclass(frozen=True)
class SetInsert:
    component: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class SetDelete:
    component: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class MapUpdate:
    """``f[key] := value``"""

    component: str
    key: tuple[Term, ...]
    value: tuple[Term, ...]


@dataclass(frozen=True)
class MapRestrict:
    """``restrict f to S``: drop every key not in the (current) set ``S``."""

    component: str
    to_set: str


@dataclass(frozen=True)
class CellUnion:
    """``f[key] += element`` i.e. ``f[key -> f(key) | {element}]``."""

    component: str
    key: tuple[Term, ...]
    element: Term


PostClause = Union[Truth, SetInsert, SetDelete, MapUpdate, MapRestrict, CellUnion]

PRE_CLAUSE_TYPES = (Truth, Membership, MappingMatch, RelationMembership, Containment)
POST_CLAUSE_TYPES = (Truth, SetInsert, SetDelete, MapUpdate, MapRestrict, CellUnion)


def clauses_of(expr) -> list:
    """Flat clause list of a precondition or postcondition."""
    if isinstance(expr, ConditionExpr):
        return list(expr.clauses)
    return list(expr)


def clause_terms(clause) -> tuple[Term, ...]:
    """All terms of a clause, in source order."""
    if isinstance(clause, Membership):
        return tuple(t for el in clause.elements for t in el)
    if isinstance(clause, MappingMatch):
        return clause.key + clause.pattern
    if isinstance(clause, (RelationMembership, SetInsert, SetDelete)):
        return clause.terms
    if isinstance(clause, Containment):
        return clause.key + (clause.element,)
    if isinstance(clause, MapUpdate):
        return clause.key + clause.value
    if isinstance(clause, CellUnion):
        return clause.key + (clause.element,)
    return ()


def clause_components(clause) -> tuple[str, ...]:
    """Names of the components a clause refers to."""
    if isinstance(clause, Truth):
        return ()
    if isinstance(clause, MapRestrict):
        return (clause.component, clause.to_set)
    return (clause.component,)


def variables(clauses) -> list[Var]:
    seen = {}
    for clause in clauses:
        for term in clause_terms(clause):
            if isinstance(term, Var):
                seen.setdefault(term.name, term)
    return list(seen.values())


def constants(clauses) -> set[Const]:
    return {t for c in clauses for t in clause_terms(c) if isinstance(t, Const)}


# -- evaluation --------------------------------------------------------------

Binding = Mapping[str, str]


def _lookup(name, q: Extents, ext: Extents | None):
    if name in q:
        return q[name]
    if ext is not None and name in ext:
        return ext[name]
    raise EvalError(f"reference to undeclared component {name!r}")


def _ground(term: Term, b: Binding):
    """Value of ``term`` under ``b``; None when it is a wildcard or unbound variable."""
    if isinstance(term, Const):
        return term.value
    if isinstance(term, Var):
        return b.get(term.name)
    return None


def _is_ground(terms, b) -> bool:
    return all(_ground(t, b) is not None for t in terms)


def _unify(terms, values, b: dict):
    """Match a term tuple against a value tuple; returns the extended binding or None."""
    if len(terms) != len(values):
        return None
    out = b
    for term, value in zip(terms, values):
        if isinstance(term, Wildcard):
            continue
        if isinstance(term, Const):
            if term.value != value:
                return None
            continue
        bound = out.get(term.name)
        if bound is None:
            if out is b:
                out = dict(b)
            out[term.name] = value
        elif bound != value:
            return None
    return out


def _check_set(extent, what):
    if not isinstance(extent, frozenset):
        raise EvalError(f"{what} is not a set or relation")


def _check_map(extent, what):
    if not isinstance(extent, FrozenMap):
        raise EvalError(f"{what} is not a mapping")


def _solve_membership(elements, extent, b):
    if not elements:
        yield b
        return
    first, rest = elements[0], elements[1:]
    if _is_ground(first, b):
        if tuple(_ground(t, b) for t in first) in extent:
            yield from _solve_membership(rest, extent, b)
        return
    for tup in sorted(extent):
        b2 = _unify(first, tup, b)
        if b2 is not None:
            yield from _solve_membership(rest, extent, b2)


def _solve_clause(clause, q, ext, b) -> Iterator[dict]:
    if isinstance(clause, Truth):
        yield b
    elif isinstance(clause, Membership):
        extent = _lookup(clause.component, q, ext)
        _check_set(extent, clause.component)
        if clause.negated:
            for el in clause.elements:
                if any(isinstance(t, Var) and t.name not in b for t in el):
                    raise EvalError(
                        f"unbound variable in negated membership over {clause.component!r}"
                    )
                if any(_unify(el, tup, b) is not None for tup in extent):
                    return
            yield b
        else:
            yield from _solve_membership(clause.elements, extent, b)
    elif isinstance(clause, RelationMembership):
        extent = _lookup(clause.component, q, ext)
        _check_set(extent, clause.component)
        yield from _solve_membership((clause.terms,), extent, b)
    elif isinstance(clause, MappingMatch):
        extent = _lookup(clause.component, q, ext)
        _check_map(extent, clause.component)
        if _is_ground(clause.key, b):
            value = extent.get(tuple(_ground(t, b) for t in clause.key))
            if value is None or isinstance(value, frozenset):
                return
            b2 = _unify(clause.pattern, value, b)
            if b2 is not None:
                yield b2
            return
        for key in sorted(extent):
            value = extent[key]
            if isinstance(value, frozenset):
                return
            b2 = _unify(clause.key, key, b)
            if b2 is None:
                continue
            b3 = _unify(clause.pattern, value, b2)
            if b3 is not None:
                yield b3
    elif isinstance(clause, Containment):
        extent = _lookup(clause.component, q, ext)
        _check_map(extent, clause.component)
        if _is_ground(clause.key, b):
            cells = [(tuple(_ground(t, b) for t in clause.key), None)]
        else:
            cells = [(k, None) for k in sorted(extent)]
        for key, _ in cells:
            b2 = _unify(clause.key, key, b)
            if b2 is None:
                continue
            cell = extent.get(key, frozenset())
            if not isinstance(cell, frozenset):
                raise EvalError(f"{clause.component!r} is not set-valued")
            for value in sorted(cell):
                b3 = _unify((clause.element,), (value,), b2)
                if b3 is not None:
                    yield b3
    else:
        raise EvalError(f"not a precondition clause: {clause!r}")


def solve(clauses, q: Extents, ext: Extents | None, b: Binding) -> Iterator[dict]:
    """All extensions of ``b`` satisfying the conjunction, in deterministic order."""
    clauses = tuple(clauses)

    def go(i, binding):
        if i == len(clauses):
            yield binding
            return
        for b2 in _solve_clause(clauses[i], q, ext, binding):
            yield from go(i + 1, b2)

    yield from go(0, dict(b))


def eval_pre(expr, q: ModelState, ext: StaticExt | None, b: Binding) -> tuple[bool, dict]:
    """Truth value of a precondition and the binding extended by pattern matches.

    On failure the original binding is returned unchanged.
    """
    for solution in solve(clauses_of(expr), q, ext, b):
        return True, solution
    return False, dict(b)


# -- updates -----------------------------------------------------------------


def _value(term: Term, b: Binding) -> str:
    if isinstance(term, Wildcard):
        raise EvalError("wildcard in an update")
    v = _ground(term, b)
    if v is None:
        raise EvalError(f"unbound variable {term.name!r} in update")
    return v


def _values(terms, b):
    return tuple(_value(t, b) for t in terms)


def apply_post(clauses, q: ModelState, b: Binding) -> ModelState:
    """Apply updates in order to a copy of ``q``; unnamed components are unchanged."""
    extents = dict(q.extents)

    def get(name, check):
        if name not in extents:
            raise EvalError(f"update of undeclared or static component {name!r}")
        value = extents[name]
        check(value, name)
        return value

    for clause in clauses_of(clauses):
        if isinstance(clause, Truth):
            continue
        if isinstance(clause, SetInsert):
            cur = get(clause.component, _check_set)
            extents[clause.component] = cur | {_values(clause.terms, b)}
        elif isinstance(clause, SetDelete):
            cur = get(clause.component, _check_set)
            extents[clause.component] = cur - {_values(clause.terms, b)}
        elif isinstance(clause, MapUpdate):
            cur = get(clause.component, _check_map)
            key = _values(clause.key, b)
            old = cur.get(key)
            if isinstance(old, frozenset):
                raise EvalError(f"{clause.component!r} is set-valued; use += to extend a cell")
            extents[clause.component] = cur.set(key, _values(clause.value, b))
        elif isinstance(clause, CellUnion):
            cur = get(clause.component, _check_map)
            key = _values(clause.key, b)
            old = cur.get(key, frozenset())
            if not isinstance(old, frozenset):
                raise EvalError(f"{clause.component!r} is not set-valued")
            extents[clause.component] = cur.set(key, old | {_value(clause.element, b)})
        elif isinstance(clause, MapRestrict):
            cur = get(clause.component, _check_map)
            if clause.to_set not in extents:
                raise EvalError(f"restriction to undeclared set {clause.to_set!r}")
            domain = extents[clause.to_set]
            _check_set(domain, clause.to_set)
            extents[clause.component] = FrozenMap(
                (k, v) for k, v in cur.items() if k in domain
            )
        else:
            raise EvalError(f"not a postcondition clause: {clause!r}")
    return type(q)(FrozenMap(extents))


# -- static matching ----------------------------------------------------------


def terms_unify(a: tuple[Term, ...], b: tuple[Term, ...]) -> bool:
    """Scheme-level compatibility: variables and wildcards match anything, constants must agree.

    Variables of different commands live in different namespaces, so no
    consistency across positions is required.
    """
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if isinstance(x, Const) and isinstance(y, Const) and x.value != y.value:
            return False
    return True


def footprint(clause):
    """``(component, terms)`` pairs a clause reads (PRE) or writes (POST).

    ``terms`` is None when the clause affects the whole component
    (restriction).  Used for syntactic dependency analysis.
    """
    if isinstance(clause, Truth):
        return []
    if isinstance(clause, Membership):
        return [(clause.component, el) for el in clause.elements]
    if isinstance(clause, MapRestrict):
        return [(clause.component, None)]
    return [(clause.component, clause_terms(clause))]
