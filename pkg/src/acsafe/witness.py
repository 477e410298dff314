"""Witnesses (replayable leaking transition sequences) and their file format.

A witness file is JSON lines: a header object, then one object per step.
Keys are sorted so identical witnesses serialize to identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from acsafe.core import step
from acsafe.errors import AcsafeError, EvalError
from acsafe.safety import SafetySpec, is_leaked
from acsafe.state import ModelState, changed_components

FORMAT = "acsafe-witness"
VERSION = 1

VALID_LEAK = "valid-leak"
REPLAY_MISMATCH = "replay-mismatch"
NO_LEAK = "no-leak"


@dataclass(frozen=True)
class WitnessStep:
    command: str
    binding: tuple[tuple[str, str], ...]
    state: ModelState

    @property
    def args(self) -> dict[str, str]:
        return dict(self.binding)

    def call(self) -> str:
        return f"{self.command}({', '.join(v for _, v in self.binding)})"


@dataclass(frozen=True)
class Witness:
    q0: ModelState
    steps: tuple[WitnessStep, ...]
    spec: SafetySpec
    stats: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.steps)

    @property
    def final(self) -> ModelState:
        return self.steps[-1].state if self.steps else self.q0

    def inputs(self):
        return [(s.command, s.args) for s in self.steps]

    def calls(self) -> list[str]:
        return [s.call() for s in self.steps]


def make_step(cmd, binding, state) -> WitnessStep:
    return WitnessStep(cmd.id, tuple((p, binding[p]) for p in cmd.param_names), state)


def replay(m, witness: Witness) -> tuple[bool, str | None]:
    """Re-execute every step; returns (ok, message of the first mismatch)."""
    q = witness.q0
    for i, s in enumerate(witness.steps, start=1):
        q2 = step(m, q, s.command, s.args)
        if q2 != s.state:
            return False, f"step {i} ({s.call()}) does not reproduce the recorded state"
        q = q2
    return True, None


def verify(m, witness: Witness) -> str:
    ok, _ = replay(m, witness)
    if not ok:
        return REPLAY_MISMATCH
    return VALID_LEAK if is_leaked(witness.spec, witness.q0, witness.final) else NO_LEAK


def format_trace(witness: Witness) -> list[str]:
    """One line per step: call, binding, changed components."""
    lines = []
    prev = witness.q0
    for i, s in enumerate(witness.steps, start=1):
        binding = ", ".join(f"{k}={v}" for k, v in s.binding)
        changed = ", ".join(changed_components(prev, s.state)) or "-"
        lines.append(f"{i}. {s.command}  [{binding}]  changed: {changed}")
        prev = s.state
    return lines


# -- file format -------------------------------------------------------------


def dump_lines(m, witness: Witness, seed=None) -> list[str]:
    header = {
        "format": FORMAT,
        "version": VERSION,
        "model": m.name,
        "model_sha256": m.fingerprint(),
        "q0_sha256": witness.q0.digest(),
        "safety": witness.spec.kind,
        "target": witness.spec.target,
        "seed": seed,
        "steps": len(witness.steps),
    }
    out = [json.dumps(header, sort_keys=True)]
    for i, s in enumerate(witness.steps, start=1):
        rec = {
            "step": i,
            "command": s.command,
            "binding": dict(s.binding),
            "state_sha256": s.state.digest(),
        }
        out.append(json.dumps(rec, sort_keys=True))
    return out


def dumps(m, witness: Witness, seed=None) -> str:
    return "\n".join(dump_lines(m, witness, seed)) + "\n"


class WitnessFormatError(AcsafeError):
    pass


@dataclass(frozen=True)
class WitnessRecord:
    """A parsed witness file: header plus (command, binding, state digest) steps."""

    header: dict
    steps: tuple[tuple[str, dict, str], ...]

    @property
    def spec(self) -> SafetySpec:
        return SafetySpec(self.header["safety"], self.header["target"])


def loads(text: str) -> WitnessRecord:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise WitnessFormatError("empty witness file")
    try:
        header = json.loads(lines[0])
        recs = [json.loads(ln) for ln in lines[1:]]
    except json.JSONDecodeError as exc:
        raise WitnessFormatError(f"malformed witness file: {exc}") from None
    if header.get("format") != FORMAT:
        raise WitnessFormatError("not a witness file")
    if header.get("version") != VERSION:
        raise WitnessFormatError(f"unsupported witness version {header.get('version')!r}")
    steps = []
    for rec in recs:
        try:
            steps.append((rec["command"], dict(rec["binding"]), rec["state_sha256"]))
        except (KeyError, TypeError):
            raise WitnessFormatError(f"malformed step record: {rec!r}") from None
    return WitnessRecord(header, tuple(steps))


@dataclass(frozen=True)
class ReplayReport:
    verdict: str
    steps_replayed: int
    message: str | None = None
    model_matches: bool = True


def replay_record(m, record: WitnessRecord) -> ReplayReport:
    """Re-run a witness file against ``m`` from its initial state."""
    spec = record.spec
    q = m.q0
    model_matches = record.header.get("model_sha256") in (None, m.fingerprint())
    if record.header.get("q0_sha256") not in (None, q.digest()):
        return ReplayReport(REPLAY_MISMATCH, 0, "initial state differs from the witness", model_matches)
    for i, (cmd_id, binding, digest) in enumerate(record.steps, start=1):
        if cmd_id not in m.delta_scheme:
            raise EvalError(f"witness step {i} references unknown command {cmd_id!r}")
        cmd = m.command(cmd_id)
        if set(binding) != set(cmd.param_names):
            return ReplayReport(
                REPLAY_MISMATCH, i - 1, f"step {i}: binding does not match the parameters of {cmd_id}",
                model_matches,
            )
        q2 = step(m, q, cmd, binding)
        if q2.digest() != digest:
            return ReplayReport(
                REPLAY_MISMATCH, i - 1, f"step {i} ({cmd_id}) does not reproduce the recorded state",
                model_matches,
            )
        q = q2
    if is_leaked(spec, m.q0, q):
        return ReplayReport(VALID_LEAK, len(record.steps), None, model_matches)
    return ReplayReport(NO_LEAK, len(record.steps), "final state does not leak the target", model_matches)
