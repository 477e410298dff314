"""Text front-end: model files, PRE/POST clauses, state literals.

The grammar is documented in ``docs/grammar.md``.  Statements are one per
line; a line is continued while brackets are open.  Parsing resolves every
component reference against the schema, so errors carry line and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from acsafe.core import Command, Model, TransitionScheme, validate_command
from acsafe.errors import DslError, SchemaError
from acsafe.logic import (
    CellUnion,
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
    Truth,
    Var,
    Wildcard,
    TRUTH,
)
from acsafe.schema import ComponentSchema, ELCategory, Kind, Schema
from acsafe.state import FrozenMap, ModelState, StaticExt

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<string>"[^"\n]*")
  | (?P<op>:=|\+=|->|[(){}\[\],:=])
  | (?P<ident>[A-Za-z0-9_][A-Za-z0-9_.]*(?:-[A-Za-z0-9_.]+)*'*)
    """,
    re.VERBOSE,
)
_IDENT_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.]*(?:-[A-Za-z0-9_.]+)*'*\Z")

KEYWORDS = frozenset(
    {
        "model", "use", "only", "sort", "component", "const", "command", "PRE", "POST",
        "ext", "state", "in", "not", "subset", "add", "to", "del", "from", "restrict",
        "true", "static", "dynamic", "set", "relation", "map",
    }
)
_TOP = frozenset({"model", "use", "sort", "component", "const", "command", "ext", "state"})
_OPEN, _CLOSE = "([{", ")]}"


@dataclass(frozen=True)
class Token:
    kind: str  # ident | string | op
    value: str
    line: int
    col: int


def tokenize(text: str, line_offset: int = 0, source=None) -> list[list[Token]]:
    """Split text into logical lines of tokens (a line continues while brackets are open)."""
    lines: list[list[Token]] = []
    current: list[Token] = []
    depth = 0
    line, line_start, pos = 1 + line_offset, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DslError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1, source
            )
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        pos = m.end()
        if kind == "nl":
            if depth == 0 and current:
                lines.append(current)
                current = []
            line += 1
            line_start = pos
            continue
        if kind in ("ws", "comment"):
            continue
        if kind == "string":
            value = value[1:-1]
        if kind == "op":
            if value in _OPEN:
                depth += 1
            elif value in _CLOSE:
                depth -= 1
                if depth < 0:
                    raise DslError(f"unbalanced {value!r}", line, col, source)
        current.append(Token(kind, value, line, col))
    if depth > 0:
        raise DslError("unclosed bracket at end of input", line, None, source)
    if current:
        lines.append(current)
    return lines


class _Cursor:
    def __init__(self, tokens, source=None):
        self.tokens = tokens
        self.i = 0
        self.source = source

    def peek(self, offset=0):
        j = self.i + offset
        return self.tokens[j] if j < len(self.tokens) else None

    def at_end(self):
        return self.i >= len(self.tokens)

    def error(self, message, tok=None):
        tok = tok or self.peek() or (self.tokens[-1] if self.tokens else None)
        if tok is None:
            raise DslError(message, source=self.source)
        col = tok.col if self.peek() is not None else tok.col + len(tok.value)
        raise DslError(message, tok.line, col, self.source)

    def next(self, what="token"):
        tok = self.peek()
        if tok is None:
            self.error(f"expected {what}, found end of line")
        self.i += 1
        return tok

    def is_op(self, value, offset=0):
        tok = self.peek(offset)
        return tok is not None and tok.kind == "op" and tok.value == value

    def is_word(self, value, offset=0):
        tok = self.peek(offset)
        return tok is not None and tok.kind == "ident" and tok.value == value

    def expect_op(self, value):
        tok = self.peek()
        if tok is None or tok.kind != "op" or tok.value != value:
            self.error(f"expected {value!r}")
        self.i += 1
        return tok

    def expect_word(self, value):
        if not self.is_word(value):
            self.error(f"expected {value!r}")
        return self.next()

    def ident(self, what="identifier"):
        tok = self.peek()
        if tok is None or tok.kind != "ident":
            self.error(f"expected {what}")
        self.i += 1
        return tok

    def atom(self):
        """An identifier or quoted string (raw token)."""
        tok = self.peek()
        if tok is None or tok.kind not in ("ident", "string"):
            self.error("expected a value")
        self.i += 1
        return tok

    def done(self):
        if not self.at_end():
            self.error(f"unexpected {self.peek().value!r}")

    def raw_tuple(self):
        """``atom`` or ``( atom, ... )`` -> list of raw tokens."""
        if self.is_op("("):
            self.next()
            items = [self.atom()]
            while self.is_op(","):
                self.next()
                items.append(self.atom())
            self.expect_op(")")
            return items
        return [self.atom()]

    def raw_list(self, close):
        items = []
        if self.is_op(close):
            self.next()
            return items
        items.append(self.atom())
        while self.is_op(","):
            self.next()
            items.append(self.atom())
        self.expect_op(close)
        return items


# -- term resolution ---------------------------------------------------------


class _Scope:
    """Variables visible while parsing one command (params plus pattern-bound names)."""

    def __init__(self, schema: Schema, params=None, source=None):
        self.schema = schema
        self.vars: dict[str, str] = dict(params or {})
        self.source = source

    def term(self, tok: Token, sort: str, binding: bool):
        def fail(msg):
            raise DslError(msg, tok.line, tok.col, self.source)

        if tok.kind == "string":
            return Const(tok.value, sort)
        name = tok.value
        if name == "_":
            if not binding:
                fail("wildcard not allowed here")
            return Wildcard(sort)
        if name in self.vars:
            if self.vars[name] != sort:
                fail(f"variable {name!r} has sort {self.vars[name]!r}, expected {sort!r}")
            return Var(name, sort)
        csort = self.schema.const_sort(name)
        if csort is not None:
            if csort != sort:
                fail(f"constant {name!r} has sort {csort!r}, expected {sort!r}")
            return Const(name, sort)
        if binding:
            if name in KEYWORDS:
                fail(f"keyword {name!r} used as a variable")
            self.vars[name] = sort
            return Var(name, sort)
        fail(f"unbound variable {name!r}")

    def terms(self, toks, sorts, binding, what, anchor):
        if len(toks) != len(sorts):
            raise DslError(
                f"arity mismatch for {what}: expected {len(sorts)}, got {len(toks)}",
                anchor.line,
                anchor.col,
                self.source,
            )
        return tuple(self.term(t, s, binding) for t, s in zip(toks, sorts))

    def component(self, tok: Token) -> ComponentSchema:
        comp = self.schema.get(tok.value)
        if comp is None:
            raise DslError(f"unknown component {tok.value!r}", tok.line, tok.col, self.source)
        return comp


def _comp_error(scope, tok, msg):
    raise DslError(msg, tok.line, tok.col, scope.source)


def _parse_pre_clause(cur: _Cursor, scope: _Scope):
    first = cur.peek()
    if cur.is_word("true") and cur.peek(1) is None:
        cur.next()
        return TRUTH
    if cur.is_op("{"):
        cur.next()
        elements = []
        if not cur.is_op("}"):
            elements.append(cur.raw_tuple())
            while cur.is_op(","):
                cur.next()
                elements.append(cur.raw_tuple())
        cur.expect_op("}")
        cur.expect_word("subset")
        ctok = cur.ident("component")
        comp = scope.component(ctok)
        if not comp.is_collection:
            _comp_error(scope, ctok, f"{comp.name!r} is not a set")
        cur.done()
        els = tuple(
            scope.terms(el, comp.sorts, True, comp.name, ctok) for el in elements
        )
        return Membership(els, comp.name)
    if first.kind == "ident" and cur.is_op("(", 1) and first.value not in KEYWORDS:
        # f(key) = pattern
        ctok = cur.next()
        comp = scope.component(ctok)
        cur.next()
        key = cur.raw_list(")")
        cur.expect_op("=")
        pattern = cur.raw_tuple()
        cur.done()
        if not comp.is_mapping:
            _comp_error(scope, ctok, f"{comp.name!r} is not a mapping")
        if comp.set_valued:
            _comp_error(scope, ctok, f"{comp.name!r} is set-valued; use 'x in {comp.name}(...)'")
        k = scope.terms(key, comp.sorts, True, comp.name, ctok)
        p = scope.terms(pattern, comp.value_sorts, True, comp.name, ctok)
        return MappingMatch(comp.name, k, p)
    lhs = cur.raw_tuple()
    negated = False
    if cur.is_word("not"):
        cur.next()
        negated = True
    cur.expect_word("in")
    ctok = cur.ident("component")
    comp = scope.component(ctok)
    if cur.is_op("("):
        cur.next()
        key = cur.raw_list(")")
        cur.done()
        if negated:
            _comp_error(scope, ctok, "negated containment is not supported")
        if not comp.is_mapping or not comp.set_valued:
            _comp_error(scope, ctok, f"{comp.name!r} is not a set-valued mapping")
        if len(lhs) != 1:
            _comp_error(scope, ctok, "containment takes a single element")
        k = scope.terms(key, comp.sorts, True, comp.name, ctok)
        el = scope.term(lhs[0], comp.value_sorts[0], True)
        return Containment(el, comp.name, k)
    cur.done()
    if not comp.is_collection:
        _comp_error(scope, ctok, f"{comp.name!r} is not a set or relation")
    terms = scope.terms(lhs, comp.sorts, not negated, comp.name, ctok)
    if comp.kind is Kind.RELATION and not negated:
        return RelationMembership(comp.name, terms)
    return Membership((terms,), comp.name, negated)


def _parse_post_clause(cur: _Cursor, scope: _Scope):
    if cur.is_word("true") and cur.peek(1) is None:
        cur.next()
        return TRUTH
    if cur.is_word("add") or cur.is_word("del"):
        op = cur.next().value
        items = cur.raw_tuple()
        cur.expect_word("to" if op == "add" else "from")
        ctok = cur.ident("component")
        cur.done()
        comp = scope.component(ctok)
        if not comp.is_collection:
            _comp_error(scope, ctok, f"{comp.name!r} is not a set")
        terms = scope.terms(items, comp.sorts, False, comp.name, ctok)
        return (SetInsert if op == "add" else SetDelete)(comp.name, terms)
    if cur.is_word("restrict"):
        cur.next()
        ctok = cur.ident("component")
        cur.expect_word("to")
        stok = cur.ident("set")
        cur.done()
        comp = scope.component(ctok)
        target = scope.component(stok)
        if not comp.is_mapping:
            _comp_error(scope, ctok, f"{comp.name!r} is not a mapping")
        if not target.is_collection:
            _comp_error(scope, stok, f"{target.name!r} is not a set")
        if target.sorts != comp.sorts:
            _comp_error(scope, stok, f"{target.name!r} does not match the domain of {comp.name!r}")
        return MapRestrict(comp.name, target.name)
    ctok = cur.ident("update")
    comp = scope.component(ctok)
    cur.expect_op("[")
    key = cur.raw_list("]")
    if not comp.is_mapping:
        _comp_error(scope, ctok, f"{comp.name!r} is not a mapping")
    k = scope.terms(key, comp.sorts, False, comp.name, ctok)
    if cur.is_op(":="):
        cur.next()
        value = cur.raw_tuple()
        cur.done()
        if comp.set_valued:
            _comp_error(scope, ctok, f"{comp.name!r} is set-valued; use '+='")
        v = scope.terms(value, comp.value_sorts, False, comp.name, ctok)
        return MapUpdate(comp.name, k, v)
    if cur.is_op("+="):
        cur.next()
        el = cur.atom()
        cur.done()
        if not comp.set_valued:
            _comp_error(scope, ctok, f"{comp.name!r} is not set-valued; use ':='")
        return CellUnion(comp.name, k, scope.term(el, comp.value_sorts[0], False))
    cur.error("expected ':=' or '+='")


def parse_condition(text: str, schema: Schema, params=None, source=None) -> ConditionExpr:
    """Parse PRE clauses (one per line) into a conjunction.

    ``params`` maps formal parameter names to sorts.  Identifiers that are
    neither parameters nor declared constants become pattern variables in
    binding positions and are errors elsewhere.
    """
    scope = _Scope(schema, params, source)
    clauses = [
        _parse_pre_clause(_Cursor(line, source), scope)
        for line in tokenize(text, source=source)
    ]
    return ConditionExpr(tuple(clauses) or (TRUTH,))


def parse_post(text: str, schema: Schema, params=None, bound=None, source=None) -> tuple:
    """Parse POST clauses; ``bound`` adds pattern variables bound by the PRE."""
    scope = _Scope(schema, {**(params or {}), **(bound or {})}, source)
    clauses = [
        _parse_post_clause(_Cursor(line, source), scope)
        for line in tokenize(text, source=source)
    ]
    return tuple(clauses)


# -- printing ----------------------------------------------------------------


def format_value(v: str) -> str:
    if _IDENT_RE.match(v) and v not in KEYWORDS and v != "_":
        return v
    return f'"{v}"'


def format_term(t, schema: Schema | None = None, shadowed=frozenset()) -> str:
    if isinstance(t, Wildcard):
        return "_"
    if isinstance(t, Var):
        return t.name
    if (
        schema is not None
        and schema.const_sort(t.value) == t.sort
        and t.value not in shadowed
        and _IDENT_RE.match(t.value)
    ):
        return t.value
    return f'"{t.value}"'


def _fmt_tuple(terms, schema, shadowed, force_parens=False):
    inner = ", ".join(format_term(t, schema, shadowed) for t in terms)
    if len(terms) == 1 and not force_parens:
        return inner
    return f"({inner})"


def format_clause(clause, schema: Schema | None = None, shadowed=frozenset()) -> str:
    """Render one PRE or POST clause in the DSL."""
    f = lambda ts, fp=False: _fmt_tuple(ts, schema, shadowed, fp)  # noqa: E731
    if isinstance(clause, Truth):
        return "true"
    if isinstance(clause, Membership):
        if len(clause.elements) == 1:
            op = "not in" if clause.negated else "in"
            return f"{f(clause.elements[0])} {op} {clause.component}"
        inner = ", ".join(f(el) for el in clause.elements)
        return f"{{{inner}}} subset {clause.component}"
    if isinstance(clause, RelationMembership):
        return f"{f(clause.terms)} in {clause.component}"
    if isinstance(clause, MappingMatch):
        key = ", ".join(format_term(t, schema, shadowed) for t in clause.key)
        return f"{clause.component}({key}) = {f(clause.pattern)}"
    if isinstance(clause, Containment):
        key = ", ".join(format_term(t, schema, shadowed) for t in clause.key)
        return f"{format_term(clause.element, schema, shadowed)} in {clause.component}({key})"
    if isinstance(clause, SetInsert):
        return f"add {f(clause.terms)} to {clause.component}"
    if isinstance(clause, SetDelete):
        return f"del {f(clause.terms)} from {clause.component}"
    if isinstance(clause, MapUpdate):
        key = ", ".join(format_term(t, schema, shadowed) for t in clause.key)
        return f"{clause.component}[{key}] := {f(clause.value)}"
    if isinstance(clause, CellUnion):
        key = ", ".join(format_term(t, schema, shadowed) for t in clause.key)
        return f"{clause.component}[{key}] += {format_term(clause.element, schema, shadowed)}"
    if isinstance(clause, MapRestrict):
        return f"restrict {clause.component} to {clause.to_set}"
    raise TypeError(f"not a clause: {clause!r}")


def format_condition(clauses, schema=None, shadowed=frozenset()) -> str:
    return "\n".join(format_clause(c, schema, shadowed) for c in clauses)


def format_command(cmd: Command, schema: Schema | None = None) -> str:
    from acsafe.logic import variables

    shadowed = set(cmd.param_names) | {v.name for v in variables(cmd.pre.clauses)}
    params = ", ".join(f"{n}: {s}" for n, s in cmd.params)
    lines = [f"command {cmd.id}({params})", "PRE:"]
    lines += ["  " + format_clause(c, schema, shadowed) for c in cmd.pre.clauses]
    lines.append("POST:")
    post = cmd.post or (TRUTH,)
    lines += ["  " + format_clause(c, schema, shadowed) for c in post]
    return "\n".join(lines)


def _format_component(comp: ComponentSchema) -> str:
    if comp.is_mapping:
        vs = ", ".join(comp.value_sorts)
        if comp.set_valued:
            vs = "set " + vs
        sig = f"map({', '.join(comp.sorts)} -> {vs})"
    else:
        sig = f"{comp.kind.value}({', '.join(comp.sorts)})"
    mode = "dynamic" if comp.dynamic else "static"
    return f"component {comp.name} : {sig} {mode} {comp.el_category.value}"


def _fmt_vals(vals):
    if len(vals) == 1:
        return format_value(vals[0])
    return "(" + ", ".join(format_value(v) for v in vals) + ")"


def format_extent(comp: ComponentSchema, extent) -> str:
    if comp.is_collection:
        items = [_fmt_vals(t) for t in sorted(extent)]
    else:
        items = []
        for key in sorted(extent):
            value = extent[key]
            if comp.set_valued:
                rhs = "{" + ", ".join(format_value(v) for v in sorted(value)) + "}"
            else:
                rhs = _fmt_vals(value)
            items.append(f"{_fmt_vals(key)} -> {rhs}")
    return "{" + ", ".join(items) + "}"


def format_extents(schema: Schema, ext, dynamic: bool) -> list[str]:
    return [
        f"  {c.name} = {format_extent(c, ext[c.name])}"
        for c in schema.components
        if c.dynamic == dynamic
    ]


def export_model(m: Model) -> str:
    """Canonical text form of a model (stable ordering; parses back to an equal model)."""
    s = m.schema
    out = [f"model {m.name}", "sort " + ", ".join(s.sorts)]
    out += [_format_component(c) for c in s.components]
    for value, sort in s.consts:
        out.append(f"const {format_value(value)} : {sort}")
    for cmd in m.delta_scheme:
        out.append("")
        out.append(format_command(cmd, s))
    out.append("")
    out.append("ext:")
    out += format_extents(s, m.ext, dynamic=False)
    out.append("")
    out.append("state q0:")
    out += format_extents(s, m.q0, dynamic=True)
    return "\n".join(out) + "\n"


def format_state(schema: Schema, q: ModelState, name="q0") -> str:
    return "\n".join([f"state {name}:"] + format_extents(schema, q, dynamic=True)) + "\n"


# -- model files -------------------------------------------------------------


def _parse_extent(cur: _Cursor, comp: ComponentSchema):
    cur.expect_op("{")
    raw_items = []
    if not cur.is_op("}"):
        while True:
            key = cur.raw_tuple()
            value = None
            if cur.is_op("->"):
                cur.next()
                if comp.is_mapping and comp.set_valued and cur.is_op("{"):
                    cur.next()
                    value = ("set", cur.raw_list("}"))
                else:
                    value = ("tuple", cur.raw_tuple())
            raw_items.append((key, value))
            if cur.is_op(","):
                cur.next()
                continue
            break
    cur.expect_op("}")
    cur.done()
    vals = lambda toks: tuple(t.value for t in toks)  # noqa: E731
    if comp.is_collection:
        out = set()
        for key, value in raw_items:
            if value is not None:
                cur.error(f"{comp.name!r} is a set; '->' not allowed", key[0])
            if len(key) != comp.arity:
                cur.error(f"arity mismatch in {comp.name!r}", key[0])
            out.add(vals(key))
        return frozenset(out)
    out = {}
    for key, value in raw_items:
        if value is None:
            cur.error(f"{comp.name!r} is a mapping; expected 'key -> value'", key[0])
        if len(key) != comp.arity:
            cur.error(f"key arity mismatch in {comp.name!r}", key[0])
        k = vals(key)
        if k in out:
            cur.error(f"duplicate key in {comp.name!r}", key[0])
        kind, toks = value
        if comp.set_valued:
            cell = frozenset(vals(toks))
            if cell:
                out[k] = cell
        else:
            if len(toks) != len(comp.value_sorts):
                cur.error(f"value arity mismatch in {comp.name!r}", key[0])
            out[k] = vals(toks)
    return FrozenMap(out)


@dataclass
class _CommandDraft:
    header: list
    pre: list
    post: list
    line: int
    section: str = "header"


def _parse_signature(cur: _Cursor):
    """``set(s)`` | ``relation(s, ...)`` | ``map(k, ... -> [set] v, ...)``"""
    kw = cur.ident("component kind")
    if kw.value not in ("set", "relation", "map"):
        cur.error("expected 'set', 'relation' or 'map'", kw)
    cur.expect_op("(")
    sorts = [cur.ident("sort").value]
    while cur.is_op(","):
        cur.next()
        sorts.append(cur.ident("sort").value)
    value_sorts, set_valued = (), False
    if kw.value == "map":
        cur.expect_op("->")
        if cur.is_word("set") and cur.peek(1) is not None and cur.peek(1).kind == "ident":
            cur.next()
            set_valued = True
        vs = [cur.ident("sort").value]
        while cur.is_op(","):
            cur.next()
            vs.append(cur.ident("sort").value)
        value_sorts = tuple(vs)
    cur.expect_op(")")
    kind = {"set": Kind.SET, "relation": Kind.RELATION, "map": Kind.MAPPING}[kw.value]
    return kind, tuple(sorts), value_sorts, set_valued


def _builtin_base(name, source, tok):
    from acsafe import models

    try:
        return models.load_builtin(name)
    except FileNotFoundError:
        raise DslError(f"unknown built-in model {name!r}", tok.line, tok.col, source) from None


def parse_model(text: str, source=None, base: Model | None = None) -> Model:
    """Parse a model file.

    ``base`` (or a ``use NAME`` line) supplies declarations, commands, static
    extension and initial state that the file extends; commands redefined in
    the file replace the base ones, listed ``ext`` components replace the
    base extents, and a ``state`` block replaces the base initial state.
    """
    name = base.name if base is not None else None
    sorts: list[str] = list(base.schema.sorts) if base else []
    components: list[ComponentSchema] = list(base.schema.components) if base else []
    consts: list[tuple[str, str]] = list(base.schema.consts) if base else []
    base_cmds: list[Command] = list(base.delta_scheme) if base else []
    base_ext = dict(base.ext.extents) if base else {}
    base_q0 = base.q0 if base else None

    drafts: list[_CommandDraft] = []
    ext_lines: list[tuple[Token, _Cursor]] = []
    state_lines: list[tuple[Token, _Cursor]] = []
    state_seen = False
    section = None  # "command" | "ext" | "state"
    used = False

    for toks in tokenize(text, source=source):
        cur = _Cursor(toks, source)
        head = toks[0]
        word = head.value if head.kind == "ident" else None
        if word in _TOP:
            cur.next()
            section = None
            if word == "model":
                name = cur.ident("model name").value
                cur.done()
            elif word == "use":
                if used or drafts or components and base is None:
                    cur.error("'use' must come first", head)
                used = True
                btok = cur.ident("model name")
                b = _builtin_base(btok.value, source, btok)
                only = None
                if cur.is_word("only"):
                    cur.next()
                    only = [cur.ident("command").value]
                    while cur.is_op(","):
                        cur.next()
                        only.append(cur.ident("command").value)
                cur.done()
                name = name or b.name
                sorts, components = list(b.schema.sorts), list(b.schema.components)
                consts = list(b.schema.consts)
                base_cmds = list(b.delta_scheme)
                if only is not None:
                    unknown = [c for c in only if c not in b.delta_scheme]
                    if unknown:
                        cur.error(f"unknown command(s) {unknown} in {btok.value!r}", btok)
                    base_cmds = [c for c in base_cmds if c.id in only]
                base_ext = dict(b.ext.extents)
                base_q0 = b.q0
            elif word == "sort":
                names = [cur.ident("sort").value]
                while cur.is_op(","):
                    cur.next()
                    names.append(cur.ident("sort").value)
                cur.done()
                for n in names:
                    if n in sorts:
                        cur.error(f"duplicate sort {n!r}", head)
                    sorts.append(n)
            elif word == "component":
                ntok = cur.ident("component name")
                if ntok.value in KEYWORDS:
                    cur.error(f"keyword {ntok.value!r} used as a component name", ntok)
                cur.expect_op(":")
                kind, csorts, vsorts, set_valued = _parse_signature(cur)
                mode = cur.ident("'static' or 'dynamic'")
                if mode.value not in ("static", "dynamic"):
                    cur.error("expected 'static' or 'dynamic'", mode)
                cat_tok = cur.ident("EL category")
                try:
                    cat = ELCategory(cat_tok.value)
                except ValueError:
                    cur.error(f"unknown EL category {cat_tok.value!r}", cat_tok)
                cur.done()
                for s in csorts + vsorts:
                    if s not in sorts:
                        cur.error(f"undeclared sort {s!r}", ntok)
                if any(c.name == ntok.value for c in components):
                    cur.error(f"duplicate component {ntok.value!r}", ntok)
                try:
                    components.append(
                        ComponentSchema(
                            ntok.value, kind, csorts, vsorts, set_valued,
                            mode.value == "dynamic", cat,
                        )
                    )
                except SchemaError as exc:
                    cur.error(str(exc), ntok)
            elif word == "const":
                values = [cur.atom().value]
                while cur.is_op(","):
                    cur.next()
                    values.append(cur.atom().value)
                cur.expect_op(":")
                stok = cur.ident("sort")
                cur.done()
                if stok.value not in sorts:
                    cur.error(f"undeclared sort {stok.value!r}", stok)
                for v in values:
                    for existing, esort in consts:
                        if existing == v and esort != stok.value:
                            cur.error(f"constant {v!r} already declared with sort {esort!r}", stok)
                    if (v, stok.value) not in consts:
                        consts.append((v, stok.value))
            elif word == "command":
                drafts.append(_CommandDraft(toks, [], [], head.line))
                section = "command"
            elif word == "ext":
                cur.expect_op(":")
                if not cur.at_end():
                    ext_lines.append((head, _Cursor(toks[cur.i:], source)))
                section = "ext"
            elif word == "state":
                if state_seen:
                    cur.error("only one state block is allowed", head)
                state_seen = True
                if not cur.is_op(":"):
                    cur.ident("state name")
                cur.expect_op(":")
                section = "state"
            continue
        if section == "command":
            d = drafts[-1]
            if word in ("PRE", "POST") and cur.is_op(":", 1):
                if word == "PRE" and d.section != "header":
                    cur.error("PRE must come before POST", head)
                if word == "POST" and d.section == "post":
                    cur.error("duplicate POST", head)
                d.section = word.lower()
                rest = toks[2:]
                if rest:
                    (d.pre if word == "PRE" else d.post).append(rest)
                continue
            if d.section == "header":
                cur.error("expected 'PRE:' or 'POST:'", head)
            (d.pre if d.section == "pre" else d.post).append(toks)
        elif section == "ext":
            ext_lines.append((head, cur))
        elif section == "state":
            state_lines.append((head, cur))
        else:
            cur.error(f"unexpected {head.value!r} outside of a block", head)

    try:
        schema = Schema(tuple(sorts), tuple(components), tuple(consts))
    except SchemaError as exc:
        raise DslError(str(exc), source=source) from None

    commands = {c.id: c for c in base_cmds}
    order = [c.id for c in base_cmds]
    for d in drafts:
        cmd = _build_command(d, schema, source)
        if cmd.id not in commands:
            order.append(cmd.id)
        elif cmd.id in {x.id for x in base_cmds}:
            base_cmds = [x for x in base_cmds if x.id != cmd.id]
        else:
            raise DslError(f"duplicate command {cmd.id!r}", d.line, None, source)
        commands[cmd.id] = cmd

    def read_block(lines, dynamic):
        found = {}
        for head, cur in lines:
            ctok = cur.ident("component")
            comp = schema.get(ctok.value)
            if comp is None:
                cur.error(f"unknown component {ctok.value!r}", ctok)
            if comp.dynamic != dynamic:
                where = "state" if dynamic else "ext"
                cur.error(f"component {comp.name!r} does not belong in a {where} block", ctok)
            if comp.name in found:
                cur.error(f"duplicate extent for {comp.name!r}", ctok)
            cur.expect_op("=")
            found[comp.name] = _parse_extent(cur, comp)
        return found

    ext_data = {
        c.name: base_ext.get(c.name, FrozenMap() if c.is_mapping else frozenset())
        for c in schema.components
        if not c.dynamic
    }
    ext_data.update(read_block(ext_lines, dynamic=False))
    if state_seen or base_q0 is None:
        q_data = {
            c.name: FrozenMap() if c.is_mapping else frozenset() for c in schema.dynamic
        }
        q_data.update(read_block(state_lines, dynamic=True))
        q0 = ModelState(FrozenMap(q_data))
    else:
        q0 = base_q0
    try:
        return Model(
            schema,
            StaticExt(FrozenMap(ext_data)),
            TransitionScheme(tuple(commands[i] for i in order)),
            q0,
            name or "model",
        )
    except SchemaError as exc:
        raise DslError(str(exc), source=source) from None


def _build_command(d: _CommandDraft, schema: Schema, source) -> Command:
    cur = _Cursor(d.header, source)
    cur.next()
    ntok = cur.ident("command name")
    cur.expect_op("(")
    params: dict[str, str] = {}
    if not cur.is_op(")"):
        while True:
            ptok = cur.ident("parameter")
            if ptok.value in KEYWORDS or ptok.value == "_":
                cur.error(f"invalid parameter name {ptok.value!r}", ptok)
            cur.expect_op(":")
            stok = cur.ident("sort")
            if stok.value not in schema.sorts:
                cur.error(f"undeclared sort {stok.value!r}", stok)
            if ptok.value in params:
                cur.error(f"duplicate parameter {ptok.value!r}", ptok)
            params[ptok.value] = stok.value
            if cur.is_op(","):
                cur.next()
                continue
            break
    cur.expect_op(")")
    cur.done()
    scope = _Scope(schema, params, source)
    pre = tuple(_parse_pre_clause(_Cursor(t, source), scope) for t in d.pre) or (TRUTH,)
    post_scope = _Scope(schema, scope.vars, source)
    post = tuple(_parse_post_clause(_Cursor(t, source), post_scope) for t in d.post)
    post = tuple(c for c in post if not isinstance(c, Truth))
    cmd = Command(ntok.value, tuple(params.items()), ConditionExpr(pre), post)
    try:
        validate_command(schema, cmd)
    except SchemaError as exc:
        raise DslError(str(exc), d.line, None, source) from None
    return cmd


def parse_command(text: str, schema: Schema, source=None) -> Command:
    """Parse a single ``command`` block against an existing schema."""
    cmds = parse_commands(text, schema, source)
    if len(cmds) != 1:
        raise DslError(f"expected exactly one command, found {len(cmds)}", source=source)
    return cmds[0]


def parse_commands(text: str, schema: Schema, source=None) -> list[Command]:
    drafts: list[_CommandDraft] = []
    for toks in tokenize(text, source=source):
        cur = _Cursor(toks, source)
        head = toks[0]
        if cur.is_word("command"):
            drafts.append(_CommandDraft(toks, [], [], head.line))
            continue
        if not drafts:
            cur.error("expected 'command'", head)
        d = drafts[-1]
        if head.kind == "ident" and head.value in ("PRE", "POST") and cur.is_op(":", 1):
            d.section = head.value.lower()
            if toks[2:]:
                (d.pre if d.section == "pre" else d.post).append(toks[2:])
            continue
        if d.section == "header":
            cur.error("expected 'PRE:' or 'POST:'", head)
        (d.pre if d.section == "pre" else d.post).append(toks)
    return [_build_command(d, schema, source) for d in drafts]


def load_model(path, base: Model | None = None) -> Model:
    p = Path(path)
    return parse_model(p.read_text(), source=str(p), base=base)
