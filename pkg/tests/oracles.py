"""Reference implementations used to cross-check the package.

Nothing here reuses the package's matching, leak or path code; clauses are
inspected through their dataclass fields and states through plain dicts.
"""

from __future__ import annotations

import dataclasses
import itertools

from acsafe import logic
from acsafe.core import decide, step


# -- clause matching ------------------------------------------------------------


def _terms_of(clause):
    """All Const/Var/Wildcard leaves of a clause, by walking its fields."""
    out = []

    def walk(x):
        if isinstance(x, (logic.Const, logic.Var, logic.Wildcard)):
            out.append(x)
        elif isinstance(x, tuple):
            for y in x:
                walk(y)

    for f in dataclasses.fields(clause):
        walk(getattr(clause, f.name))
    return out


def _elements(clause):
    """Per-tuple term lists a clause mentions (one list per set element)."""
    if isinstance(clause, logic.Membership):
        return [list(el) for el in clause.elements]
    return [_terms_of(clause)]


def _pair_unifies(xs, ys):
    if len(xs) != len(ys):
        return False
    for x, y in zip(xs, ys):
        if isinstance(x, logic.Const) and isinstance(y, logic.Const) and x.value != y.value:
            return False
    return True


def edge_justified(c1, c2) -> bool:
    """A POST clause of c1 and a PRE clause of c2 over one component with unifiable terms."""
    for post in c1.post:
        if isinstance(post, logic.Truth):
            continue
        for pre in c2.pre.clauses:
            if isinstance(pre, logic.Truth) or pre.component != post.component:
                continue
            if isinstance(post, logic.MapRestrict):
                return True
            for el in _elements(pre):
                if _pair_unifies(_terms_of(post), el):
                    return True
    return False


# -- leak predicates over plain dicts -----------------------------------------------


def plain(q):
    """ModelState -> {name: set or dict} with unwrapped 1-tuples."""
    out = {}
    for name in q.names():
        ext = q[name]
        if isinstance(ext, frozenset):
            out[name] = {t[0] if len(t) == 1 else t for t in ext}
        else:
            out[name] = {
                (k[0] if len(k) == 1 else k): (v if isinstance(v, frozenset) else (v[0] if len(v) == 1 else v))
                for k, v in ext.items()
            }
    return out


def leak_reference(kind, target, q0, q1) -> bool:
    a, b = plain(q0), plain(q1)
    if kind == "r-simple":
        return any(
            target in cell and (s not in a["S"] or o not in a["O"] or target not in a["acm"].get((s, o), set()))
            for (s, o), cell in b["acm"].items()
        )
    if kind == "e":
        return target in b["E"] and target not in a["E"]
    if kind == "c":
        return any(b["cl"].get(e) == target and a["cl"].get(e) != target for e in a["E"] & b["E"])
    t_unsafe = any(
        e in b["con"] and e in a["con"] and b["con"][e][2] == target and a["con"][e][2] != target
        for e in a["E"] & b["E"]
    )
    if kind == "t":
        return t_unsafe
    fresh_typed = any(e in b["con"] and b["con"][e][2] == target for e in b["E"] - a["E"])
    return t_unsafe or fresh_typed


# -- paths ------------------------------------------------------------------------


def all_paths(succ, source, sink, max_len, max_occurrences):
    """Every source..sink path with at most ``max_len`` inner vertices (exhaustive product)."""
    inner = sorted({v for vs in succ.values() for v in vs} | set(succ) - {source, sink})
    found = []
    for n in range(0, max_len + 1):
        for combo in itertools.product(inner, repeat=n):
            if any(combo.count(v) > max_occurrences for v in combo):
                continue
            path = [source, *combo, sink]
            if all(b in succ.get(a, ()) for a, b in zip(path, path[1:])):
                found.append(path)
    return found


# -- bindings -----------------------------------------------------------------------


def state_changing_bindings(model, q, cmd, pools):
    """All bindings over the given per-parameter pools that fire and change ``q``."""
    names = cmd.param_names
    out = []
    for combo in itertools.product(*(pools[n] for n in names)):
        b = dict(zip(names, combo))
        if decide(model, q, cmd, b) and step(model, q, cmd, b) != q:
            out.append(b)
    return out


def replay_states(model, q0, calls):
    q = q0
    states = []
    for cmd, b in calls:
        q = step(model, q, cmd, b)
        states.append(q)
    return states
