"""Immutable extents of model components.

Extent representation, by component kind:

* set / relation: ``frozenset`` of value tuples
* scalar mapping: ``FrozenMap`` from key tuple to value tuple
* set-valued mapping: ``FrozenMap`` from key tuple to ``frozenset`` of values;
  empty cells are never stored, so an absent key reads as the empty set
"""

from __future__ import annotations

import hashlib
from collections.abc import Mapping

from acsafe.errors import SchemaError
from acsafe.schema import ComponentSchema, Schema

FRESH_PREFIX = "fresh-"


class FrozenMap(Mapping):
    """A hashable, immutable dict."""

    __slots__ = ("_d", "_h")

    def __init__(self, data=()):
        self._d = dict(data)
        self._h = None

    def __getitem__(self, key):
        return self._d[key]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __hash__(self):
        if self._h is None:
            self._h = hash(frozenset(self._d.items()))
        return self._h

    def __eq__(self, other):
        if isinstance(other, FrozenMap):
            return self._d == other._d
        if isinstance(other, Mapping):
            return self._d == dict(other)
        return NotImplemented

    def __repr__(self):
        return f"FrozenMap({self._d!r})"

    def __reduce__(self):
        return (FrozenMap, (self._d,))

    def set(self, key, value) -> "FrozenMap":
        d = dict(self._d)
        d[key] = value
        return FrozenMap(d)

    def delete(self, key) -> "FrozenMap":
        d = dict(self._d)
        d.pop(key, None)
        return FrozenMap(d)


def empty_extent(comp: ComponentSchema):
    return FrozenMap() if comp.is_mapping else frozenset()


def _as_tuple(value, arity, what):
    if isinstance(value, str):
        value = (value,)
    value = tuple(value)
    if len(value) != arity or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{what}: expected a {arity}-tuple of identifiers, got {value!r}")
    return value


def coerce_extent(comp: ComponentSchema, raw):
    """Build an extent from plain Python data (strings, tuples, dicts, sets)."""
    if comp.is_collection:
        if isinstance(raw, (frozenset, set, list, tuple)):
            return frozenset(_as_tuple(v, comp.arity, comp.name) for v in raw)
        raise SchemaError(f"{comp.name}: expected a collection, got {type(raw).__name__}")
    if not isinstance(raw, Mapping):
        raise SchemaError(f"{comp.name}: expected a mapping, got {type(raw).__name__}")
    items = {}
    for key, value in raw.items():
        key = _as_tuple(key, comp.arity, comp.name)
        if comp.set_valued:
            if isinstance(value, str):
                value = (value,)
            cell = frozenset(value)
            if not all(isinstance(v, str) for v in cell):
                raise SchemaError(f"{comp.name}: cell values must be identifiers")
            if cell:
                items[key] = cell
        else:
            items[key] = _as_tuple(value, len(comp.value_sorts), comp.name)
    return FrozenMap(items)


class Extents:
    """Common base of :class:`ModelState` and :class:`StaticExt`."""

    __slots__ = ("extents", "_h")

    def __init__(self, extents=()):
        self.extents = extents if isinstance(extents, FrozenMap) else FrozenMap(extents)
        self._h = None

    def __getitem__(self, name):
        return self.extents[name]

    def __contains__(self, name):
        return name in self.extents

    def get(self, name, default=None):
        return self.extents.get(name, default)

    def names(self):
        return list(self.extents)

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.extents == other.extents

    def __hash__(self):
        if self._h is None:
            self._h = hash((type(self).__name__, self.extents))
        return self._h

    def __repr__(self):
        return f"{type(self).__name__}({dict(self.extents)!r})"

    def __reduce__(self):
        return (type(self), (self.extents,))

    def replace(self, **changes):
        """Copy with some extents replaced."""
        d = dict(self.extents)
        d.update(changes)
        return type(self)(FrozenMap(d))

    def sort_key(self):
        """A total, deterministic ordering key (structural)."""
        out = []
        for name in sorted(self.extents):
            ext = self.extents[name]
            if isinstance(ext, FrozenMap):
                items = sorted(
                    (k, tuple(sorted(v)) if isinstance(v, frozenset) else v)
                    for k, v in ext.items()
                )
                out.append((name, tuple(items)))
            else:
                out.append((name, tuple(sorted(ext))))
        return tuple(out)

    def digest(self) -> str:
        return hashlib.sha256(repr(self.sort_key()).encode()).hexdigest()

    @classmethod
    def build(cls, schema: Schema, data: Mapping, dynamic: bool):
        """Coerce plain data; components of the right class missing from ``data`` are empty."""
        extents = {}
        for comp in schema.components:
            if comp.dynamic != dynamic:
                if comp.name in data:
                    where = "state" if dynamic else "static extension"
                    raise SchemaError(f"component {comp.name!r} does not belong in a {where}")
                continue
            raw = data.get(comp.name)
            extents[comp.name] = empty_extent(comp) if raw is None else coerce_extent(comp, raw)
        unknown = set(data) - {c.name for c in schema.components}
        if unknown:
            raise SchemaError(f"unknown component(s): {', '.join(sorted(unknown))}")
        return cls(FrozenMap(extents))


class ModelState(Extents):
    """A protection state: extents of every dynamic component."""

    __slots__ = ()

    @classmethod
    def from_dict(cls, schema: Schema, data: Mapping) -> "ModelState":
        return cls.build(schema, data, dynamic=True)

    @classmethod
    def empty(cls, schema: Schema) -> "ModelState":
        return cls.build(schema, {}, dynamic=True)


class StaticExt(Extents):
    """Extents of the static components; fixed for the lifetime of a model."""

    __slots__ = ()

    @classmethod
    def from_dict(cls, schema: Schema, data: Mapping) -> "StaticExt":
        return cls.build(schema, data, dynamic=False)


def check_extents(schema: Schema, ext: Extents, dynamic: bool) -> None:
    """Raise SchemaError unless ``ext`` is well-formed for the given component class.

    Only shape is checked here. Carrier membership needs a static extension
    and lives in :func:`check_state`.
    """
    expected = {c.name for c in schema.components if c.dynamic == dynamic}
    present = set(ext.names())
    if present != expected:
        missing = expected - present
        extra = present - expected
        parts = []
        if missing:
            parts.append(f"missing {sorted(missing)}")
        if extra:
            parts.append(f"unexpected {sorted(extra)}")
        raise SchemaError("malformed extents: " + ", ".join(parts))
    for name in expected:
        comp = schema.component(name)
        value = ext[name]
        if comp.is_collection:
            if not isinstance(value, frozenset):
                raise SchemaError(f"{name}: extent must be a frozenset")
            for t in value:
                _as_tuple(t, comp.arity, name)
        else:
            if not isinstance(value, FrozenMap):
                raise SchemaError(f"{name}: extent must be a FrozenMap")
            for k, v in value.items():
                _as_tuple(k, comp.arity, name)
                if comp.set_valued:
                    if not isinstance(v, frozenset) or not v:
                        raise SchemaError(f"{name}: cells must be non-empty frozensets")
                else:
                    _as_tuple(v, len(comp.value_sorts), name)


def check_state(schema: Schema, q: ModelState, ext: StaticExt | None = None) -> None:
    check_extents(schema, q, dynamic=True)
    if ext is None:
        return
    found = values_by_sort(schema, q)
    for sort, values in found.items():
        carrier = schema.carrier(sort)
        if carrier is None:
            continue
        allowed = {t[0] for t in ext[carrier.name]}
        bad = values - allowed
        if bad:
            raise SchemaError(f"values {sorted(bad)} of sort {sort!r} are not in {carrier.name}")


def values_by_sort(schema: Schema, ext: Extents) -> dict[str, set[str]]:
    """All values occurring in ``ext``, grouped by the sort of their position."""
    out: dict[str, set[str]] = {}
    for name in ext.names():
        comp = schema.get(name)
        if comp is None:
            continue
        extent = ext[name]
        if comp.is_collection:
            for t in extent:
                for sort, v in zip(comp.sorts, t):
                    out.setdefault(sort, set()).add(v)
            continue
        for key, value in extent.items():
            for sort, v in zip(comp.sorts, key):
                out.setdefault(sort, set()).add(v)
            if comp.set_valued:
                out.setdefault(comp.value_sorts[0], set()).update(value)
            else:
                for sort, v in zip(comp.value_sorts, value):
                    out.setdefault(sort, set()).add(v)
    return out


def fresh_name(index: int) -> str:
    return f"{FRESH_PREFIX}{index}"


def next_fresh(used) -> str:
    """Smallest ``fresh-k`` not in ``used``."""
    k = 0
    while fresh_name(k) in used:
        k += 1
    return fresh_name(k)


def rename(schema: Schema, q: Extents, mapping: Mapping[str, Mapping[str, str]]):
    """Rename values per sort; ``mapping[sort][old] = new``."""
    if not any(mapping.values()):
        return q
    out = {}
    for name in q.names():
        comp = schema.component(name)
        extent = q[name]

        def ren(sort, v):
            m = mapping.get(sort)
            return m.get(v, v) if m else v

        if comp.is_collection:
            out[name] = frozenset(
                tuple(ren(s, v) for s, v in zip(comp.sorts, t)) for t in extent
            )
        elif comp.set_valued:
            vs = comp.value_sorts[0]
            out[name] = FrozenMap(
                (tuple(ren(s, v) for s, v in zip(comp.sorts, k)), frozenset(ren(vs, x) for x in cell))
                for k, cell in extent.items()
            )
        else:
            out[name] = FrozenMap(
                (
                    tuple(ren(s, v) for s, v in zip(comp.sorts, k)),
                    tuple(ren(s, v) for s, v in zip(comp.value_sorts, val)),
                )
                for k, val in extent.items()
            )
    return type(q)(FrozenMap(out))


def changed_components(q: Extents, q2: Extents) -> list[str]:
    return sorted(n for n in q2.names() if q.get(n) != q2[n])


def changed_values(q: Extents, q2: Extents) -> set[str]:
    """Values occurring in entries that differ between the two states."""
    out: set[str] = set()
    for name in q2.names():
        a, b = q.get(name), q2[name]
        if a == b:
            continue
        if isinstance(b, FrozenMap):
            a = a or FrozenMap()
            for key in set(a) | set(b):
                va, vb = a.get(key), b.get(key)
                if va != vb:
                    out.update(key)
                    for v in (va, vb):
                        if v:
                            out.update(v)
        else:
            for t in (a or frozenset()) ^ b:
                out.update(t)
    return out
