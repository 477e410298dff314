"""Component declarations: sorts, component kinds and EL categories."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from acsafe.errors import SchemaError


class ELCategory(str, enum.Enum):
    """Entity-labeling categories a model component can be tagged with."""

    LS = "LS"  # label sets
    RR = "RR"  # relabeling rules
    ES = "ES"  # entity sets
    LA = "LA"  # label assignments
    AR = "AR"  # access rules
    MC = "MC"  # model constraints


class Kind(str, enum.Enum):
    SET = "set"
    RELATION = "relation"
    MAPPING = "map"


@dataclass(frozen=True)
class ComponentSchema:
    """Signature of one model component.

    For sets and relations ``sorts`` are the element sorts.  For mappings
    ``sorts`` are the key sorts and ``value_sorts`` the sorts of the value
    tuple; a set-valued mapping (``f : K -> 2^V``) has exactly one value sort.
    """

    name: str
    kind: Kind
    sorts: tuple[str, ...]
    value_sorts: tuple[str, ...] = ()
    set_valued: bool = False
    dynamic: bool = False
    el_category: ELCategory = ELCategory.MC

    def __post_init__(self):
        if not self.sorts:
            raise SchemaError(f"component {self.name!r} has an empty signature")
        if self.kind is Kind.MAPPING:
            if not self.value_sorts:
                raise SchemaError(f"mapping {self.name!r} has no value sorts")
            if self.set_valued and len(self.value_sorts) != 1:
                raise SchemaError(f"set-valued mapping {self.name!r} needs exactly one value sort")
        elif self.value_sorts or self.set_valued:
            raise SchemaError(f"{self.kind.value} {self.name!r} cannot have value sorts")

    @property
    def arity(self) -> int:
        return len(self.sorts)

    @property
    def is_mapping(self) -> bool:
        return self.kind is Kind.MAPPING

    @property
    def is_collection(self) -> bool:
        """True for sets and relations (extent is a set of tuples)."""
        return self.kind is not Kind.MAPPING

    def signature_sorts(self) -> tuple[str, ...]:
        return self.sorts + self.value_sorts


@dataclass(frozen=True)
class Schema:
    """All declarations of a model: sorts, components and named constants."""

    sorts: tuple[str, ...]
    components: tuple[ComponentSchema, ...]
    consts: tuple[tuple[str, str], ...] = ()
    _by_name: dict = field(init=False, repr=False, compare=False, hash=False)
    _const_sorts: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if len(set(self.sorts)) != len(self.sorts):
            raise SchemaError("duplicate sort declaration")
        by_name = {}
        for comp in self.components:
            if comp.name in by_name:
                raise SchemaError(f"duplicate component {comp.name!r}")
            for sort in comp.signature_sorts():
                if sort not in self.sorts:
                    raise SchemaError(f"component {comp.name!r} uses undeclared sort {sort!r}")
            by_name[comp.name] = comp
        const_sorts = {}
        for value, sort in self.consts:
            if sort not in self.sorts:
                raise SchemaError(f"constant {value!r} has undeclared sort {sort!r}")
            if const_sorts.get(value, sort) != sort:
                raise SchemaError(f"constant {value!r} declared with two sorts")
            const_sorts[value] = sort
        object.__setattr__(self, "_by_name", by_name)
        object.__setattr__(self, "_const_sorts", const_sorts)

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def component(self, name: str) -> ComponentSchema:
        try:
            return self._by_name[name]
        except KeyError:
            raise SchemaError(f"unknown component {name!r}") from None

    def get(self, name: str):
        return self._by_name.get(name)

    @property
    def dynamic(self) -> tuple[ComponentSchema, ...]:
        return tuple(c for c in self.components if c.dynamic)

    @property
    def static(self) -> tuple[ComponentSchema, ...]:
        return tuple(c for c in self.components if not c.dynamic)

    def const_sort(self, value: str):
        return self._const_sorts.get(value)

    def consts_of_sort(self, sort: str) -> frozenset[str]:
        return frozenset(v for v, s in self.consts if s == sort)

    def carrier(self, sort: str):
        """The static unary set enumerating ``sort`` (e.g. ``T`` for types), if any.

        Sorts without a carrier are open: fresh values may be invented for them.
        """
        for comp in self.components:
            if (
                not comp.dynamic
                and comp.kind is Kind.SET
                and comp.sorts == (sort,)
            ):
                return comp
        return None

    def with_consts(self, extra) -> "Schema":
        merged = list(self.consts)
        for item in extra:
            if item not in merged:
                merged.append(item)
        return Schema(self.sorts, self.components, tuple(merged))
