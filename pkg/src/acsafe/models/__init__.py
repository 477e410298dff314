"""Bundled models: HRU, SELX and a few small instances used by the examples.

Model names are resolved as a file path first, then in the directories
listed in ``ACSAFE_MODEL_PATH`` (``os.pathsep`` separated), then among the
bundled ``*.acm`` files.
"""

from __future__ import annotations

import functools
import os
from importlib import resources
from pathlib import Path

from acsafe.core import Command, Model, TransitionScheme
from acsafe.errors import SchemaError
from acsafe.state import ModelState, StaticExt

MODEL_PATH_ENV = "ACSAFE_MODEL_PATH"
SUFFIX = ".acm"


def builtin_names() -> list[str]:
    files = resources.files(__name__)
    return sorted(p.name[: -len(SUFFIX)] for p in files.iterdir() if p.name.endswith(SUFFIX))


def builtin_text(name: str) -> str:
    res = resources.files(__name__).joinpath(name + SUFFIX)
    if not res.is_file():
        raise FileNotFoundError(name)
    return res.read_text()


@functools.lru_cache(maxsize=None)
def load_builtin(name: str) -> Model:
    from acsafe.dsl import parse_model

    return parse_model(builtin_text(name), source=f"<builtin {name}>")


def resolve(name_or_path: str) -> Path | None:
    """Locate a model file; returns None for bundled models."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    for d in os.environ.get(MODEL_PATH_ENV, "").split(os.pathsep):
        if not d:
            continue
        for candidate in (Path(d) / name_or_path, Path(d) / (name_or_path + SUFFIX)):
            if candidate.is_file():
                return candidate
    return None


def find_model(name_or_path: str) -> Model:
    from acsafe.dsl import load_model

    path = resolve(name_or_path)
    if path is not None:
        return load_model(path)
    name = name_or_path[: -len(SUFFIX)] if name_or_path.endswith(SUFFIX) else name_or_path
    try:
        return load_builtin(name)
    except FileNotFoundError:
        raise FileNotFoundError(
            f"model {name_or_path!r} not found (bundled: {', '.join(builtin_names())})"
        ) from None


def hru_model() -> Model:
    return load_builtin("hru")


def selx_model() -> Model:
    return load_builtin("selx")


def build_hru(rights=(), commands=None, q0=None) -> Model:
    """HRU with delegateRead plus ``commands`` (DSL text or Command objects).

    Every right in ``rights`` becomes a named constant and a member of R.
    """
    from acsafe.dsl import parse_commands

    base = hru_model()
    schema = base.schema.with_consts((r, "right") for r in rights)
    r_ext = frozenset(base.ext["R"]) | {(r,) for r in rights}
    ext = base.ext.replace(R=r_ext)
    if isinstance(commands, str):
        extra = parse_commands(commands, schema, source="<commands>")
    else:
        extra = list(commands or ())
    scheme = base.delta_scheme
    for cmd in extra:
        if not isinstance(cmd, Command):
            raise TypeError(f"expected a Command, got {type(cmd).__name__}")
        scheme = scheme.with_command(cmd)
    if q0 is None:
        q0 = base.q0
    elif not isinstance(q0, ModelState):
        q0 = ModelState.from_dict(schema, q0)
    return Model(schema, ext, scheme, q0, base.name)


def build_selx(ext, q0=None) -> Model:
    """SELX with its four basic commands over the given static extension."""
    base = selx_model()
    schema = base.schema
    if not isinstance(ext, StaticExt):
        ext = StaticExt.from_dict(schema, ext)
    if ("process",) not in ext["C"]:
        raise SchemaError("SELX needs the class 'process' in C")
    carrier = {name: {t[0] for t in ext[name]} for name in ("C", "U", "R", "T", "P")}
    for key, perms in ext["allow"].items():
        t1, t2, c = key
        if t1 not in carrier["T"] or t2 not in carrier["T"] or c not in carrier["C"]:
            raise SchemaError(f"allow key {key} is not in T x T x C")
        if not perms <= carrier["P"]:
            raise SchemaError(f"allow{key} grants permissions outside P")
    for r1, r2 in ext["role_trans"]:
        if r1 not in carrier["R"] or r2 not in carrier["R"]:
            raise SchemaError(f"role transition ({r1}, {r2}) is not in R x R")
    for tr in ext["type_trans"]:
        if not set(tr) <= carrier["T"]:
            raise SchemaError(f"type transition {tr} is not in T x T x T")
    if q0 is None:
        q0 = ModelState.empty(schema)
    elif not isinstance(q0, ModelState):
        q0 = ModelState.from_dict(schema, q0)
    return Model(schema, ext, TransitionScheme(base.delta_scheme.commands), q0, base.name)
