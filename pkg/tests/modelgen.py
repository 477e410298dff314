"""Seeded generator of small SELX-schema models for differential testing."""

from __future__ import annotations

import random
from dataclasses import dataclass

from acsafe.core import Model, TransitionScheme
from acsafe.dsl import parse_commands
from acsafe.models import selx_model
from acsafe.safety import SafetySpec
from acsafe.state import ModelState, StaticExt

EXTRA_COMMANDS = {
    "relabel_self": """
command relabel_self(e: entity, r': role, t': type)
PRE:
  e in E
  cl(e) = process
  con(e) = (u, r, t)
  (r, r') in role_trans
  (t, t, t') in type_trans
POST:
  con[e] := (u, r', t')
""",
    "spawn": """
command spawn(e: entity, e': entity, t': type)
PRE:
  e in E
  e' not in E
  cl(e) = process
  con(e) = (u, r, t)
  (t, t, t') in type_trans
POST:
  add e' to E
  cl[e'] := process
  con[e'] := (u, r, t')
""",
    "reclassify": """
command reclassify(e: entity, c': class)
PRE:
  e in E
  cl(e) = "file"
  c' in C
POST:
  cl[e] := c'
""",
    "relabel_file": """
command relabel_file(e: entity, f: entity, t': type)
PRE:
  e in E
  cl(f) = "file"
  con(e) = (u, r, t)
  con(f) = (_, _, tf)
  (t, tf, t') in type_trans
POST:
  con[e] := (u, r, t')
""",
}

STANDARD = ("create", "remove", "relabel", "access")


@dataclass(frozen=True)
class Case:
    seed: int
    model: Model
    spec: SafetySpec
    commands: tuple[str, ...]


def random_ext(rng: random.Random, n_types: int):
    types = [f"t{i}" for i in range(n_types)]
    roles = ["r0", "r1"]
    role_trans = {("r0", "r0")}
    if rng.random() < 0.5:
        role_trans.add(("r0", "r1"))
    type_trans = set()
    for _ in range(rng.randint(0, 4)):
        type_trans.add((rng.choice(types), rng.choice(types), rng.choice(types)))
    allow = {}
    for _ in range(rng.randint(0, 2)):
        allow[(rng.choice(types), rng.choice(types), rng.choice(["process", "file"]))] = {"read"}
    return {
        "C": {"process", "file", "socket"},
        "U": {"u"},
        "R": set(roles),
        "T": set(types),
        "role_trans": role_trans,
        "type_trans": type_trans,
        "P": {"read"},
        "allow": allow,
    }


def random_state(rng: random.Random, types, n_entities: int):
    names = [f"p{i}" if i == 0 else f"n{i}" for i in range(n_entities)]
    cl, con = {}, {}
    for i, e in enumerate(names):
        cl[e] = "process" if i == 0 or rng.random() < 0.4 else "file"
        con[e] = ("u", "r0", rng.choice(types))
    return {"E": set(names), "cl": cl, "con": con}


def generate(seed: int) -> Case:
    rng = random.Random(seed)
    base = selx_model()
    schema = base.schema
    n_types = rng.randint(2, 4)
    ext = StaticExt.from_dict(schema, random_ext(rng, n_types))
    types = sorted(t[0] for t in ext["T"])
    q0 = ModelState.from_dict(schema, random_state(rng, types, rng.randint(1, 3)))
    pool = list(STANDARD) + sorted(EXTRA_COMMANDS)
    chosen = rng.sample(pool, rng.randint(1, 4))
    if not any(c in chosen for c in ("relabel", "relabel_self", "spawn", "relabel_file", "create", "reclassify")):
        chosen[0] = rng.choice(["relabel", "relabel_self", "relabel_file"])
    chosen = [c for c in pool if c in chosen]
    cmds = []
    for name in chosen:
        if name in STANDARD:
            cmds.append(base.command(name))
        else:
            cmds.extend(parse_commands(EXTRA_COMMANDS[name], schema, source=name))
    model = Model(schema, ext, TransitionScheme(tuple(cmds)), q0, f"gen-{seed}")
    kind = rng.choice(["t", "t", "t-simple", "e", "c"])
    if kind in ("t", "t-simple"):
        target = rng.choice(types)
    elif kind == "c":
        target = rng.choice(["process", "socket"])
    else:
        target = rng.choice(["x", "n3"])
    return Case(seed, model, SafetySpec(kind, target), tuple(chosen))
