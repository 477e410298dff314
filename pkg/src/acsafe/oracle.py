"""Bounded breadth-first reachability, used to cross-check the heuristic.

Every (command, binding) successor of every reachable state is explored
level by level, so the first leaking state found yields a shortest witness.
Bindings range over the values present in the current state and static
extension, declared constants, the safety target, and a bounded supply of
fresh identifiers per open sort.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from acsafe.core import step
from acsafe.logic import Membership, Truth, Var, clause_terms, clauses_of, solve
from acsafe.safety import check_spec, is_leaked
from acsafe.state import FRESH_PREFIX, next_fresh, rename, values_by_sort
from acsafe.witness import Witness, make_step


@dataclass(frozen=True)
class OracleBounds:
    max_depth: int = 6
    max_fresh: int = 2
    max_states: int = 100_000

    def __post_init__(self):
        for name in ("max_depth", "max_states"):
            if getattr(self, name) <= 0:
                raise ValueError(f"oracle bound {name} must be positive")
        if self.max_fresh < 0:
            raise ValueError("oracle bound max_fresh must not be negative")


@dataclass(frozen=True)
class SafeWithinBounds:
    """No leaking state within ``depth`` steps; ``complete`` if the state space was exhausted earlier."""

    depth: int
    states: int
    complete: bool


@dataclass(frozen=True)
class BoundsExceeded:
    depth: int
    states: int


def _fresh_values(values):
    return sorted(v for v in values if v.startswith(FRESH_PREFIX))


def canonical_key(schema, q, q0_values=frozenset(), symmetry=True):
    """Structural key of ``q``, modulo renaming of fresh identifiers when ``symmetry`` is on."""
    if not symmetry:
        return q.sort_key()
    by_sort = values_by_sort(schema, q)
    fresh = {
        sort: [v for v in _fresh_values(vals) if v not in q0_values]
        for sort, vals in by_sort.items()
    }
    fresh = {s: vs for s, vs in fresh.items() if vs}
    if not fresh:
        return q.sort_key()
    sorts = sorted(fresh)
    # all fresh identifiers share one name pool, so rename within the union
    pool = sorted({v for vs in fresh.values() for v in vs})
    targets = [f"{FRESH_PREFIX}{i}" for i in range(len(pool))]
    best = None
    for perm in itertools.permutations(targets):
        mapping = dict(zip(pool, perm))
        renamed = rename(schema, q, {s: mapping for s in sorts})
        key = renamed.sort_key()
        if best is None or key < best:
            best = key
    return best


def _pools(model, q, spec, bounds, q0_values):
    schema = model.schema
    in_state = values_by_sort(schema, q)
    in_ext = values_by_sort(schema, model.ext)
    used = set().union(*in_state.values(), *in_ext.values(), {v for v, _ in schema.consts})
    pools = {}
    for sort in schema.sorts:
        carrier = schema.carrier(sort)
        if carrier is not None:
            pools[sort] = sorted(t[0] for t in model.ext[carrier.name])
            continue
        vals = set(in_state.get(sort, ())) | in_ext.get(sort, set()) | schema.consts_of_sort(sort)
        if spec.target_sort == sort:
            vals.add(spec.target)
        fresh_in_use = [v for v in _fresh_values(in_state.get(sort, ())) if v not in q0_values]
        if len(fresh_in_use) < bounds.max_fresh:
            vals.add(next_fresh(used))
        pools[sort] = sorted(vals)
    return pools


def _bound_by_pre(cmd):
    names = set()
    for clause in clauses_of(cmd.pre):
        if isinstance(clause, Membership) and clause.negated:
            continue
        names |= {t.name for t in clause_terms(clause) if isinstance(t, Var)}
    return names


def _bindings(model, q, cmd, pools):
    """Every binding over the pools under which PRE holds.

    Parameters that occur in a positive clause are enumerated by the clause
    solver (a satisfying value must occur in the matched extent); the rest
    range over their pool.  Negated clauses are checked last, once their
    variables are bound.
    """
    solved = _bound_by_pre(cmd)
    free = [(n, s) for n, s in cmd.params if n not in solved]
    clauses = sorted(clauses_of(cmd.pre), key=lambda c: isinstance(c, Membership) and c.negated)
    seen = set()
    for combo in itertools.product(*(pools[s] for _, s in free)):
        partial = {n: v for (n, _), v in zip(free, combo)}
        for sol in solve(clauses, q, model.ext, partial):
            b = tuple(sol[p] for p in cmd.param_names)
            if b not in seen:
                seen.add(b)
                yield dict(zip(cmd.param_names, b))


def _state_changing(cmd):
    return any(not isinstance(c, Truth) for c in cmd.post)


def bfs_unsafe(model, spec, bounds: OracleBounds = OracleBounds(), symmetry: bool = True):
    """Shortest leaking sequence within the bounds, or a bounded-safety verdict."""
    check_spec(spec, model)
    schema = model.schema
    q0 = model.q0
    q0_values = frozenset().union(*values_by_sort(schema, q0).values())
    commands = [c for c in model.delta_scheme if _state_changing(c)]
    visited = {canonical_key(schema, q0, q0_values, symmetry)}
    frontier = [(q0, ())]
    for depth in range(1, bounds.max_depth + 1):
        nxt_frontier = []
        for q, trail in frontier:
            pools = _pools(model, q, spec, bounds, q0_values)
            for cmd in commands:
                for b in _bindings(model, q, cmd, pools):
                    q2 = step(model, q, cmd, b)
                    if q2 == q:
                        continue
                    new_trail = trail + (make_step(cmd, b, q2),)
                    if is_leaked(spec, q0, q2):
                        return Witness(
                            q0, new_trail, spec, {"states_visited": len(visited), "depth": depth}
                        )
                    key = canonical_key(schema, q2, q0_values, symmetry)
                    if key in visited:
                        continue
                    visited.add(key)
                    if len(visited) > bounds.max_states:
                        return BoundsExceeded(depth, len(visited))
                    nxt_frontier.append((q2, new_trail))
        frontier = nxt_frontier
        if not frontier:
            return SafeWithinBounds(depth, len(visited), True)
    return SafeWithinBounds(bounds.max_depth, len(visited), False)
