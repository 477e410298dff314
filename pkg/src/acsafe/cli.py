"""Command-line front-end.

Exit status: 0 leak found (or success), 2 budget exhausted / no leak within
bounds, 1 error.  ``replay`` additionally uses 3 for a replay mismatch.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from acsafe import __version__
from acsafe.cdg import cdg_assembly, hooks_for
from acsafe.core import decide, step
from acsafe.dsl import format_clause, format_state, parse_model
from acsafe.errors import AcsafeError
from acsafe.models import MODEL_PATH_ENV, find_model
from acsafe.oracle import BoundsExceeded, OracleBounds, SafeWithinBounds, bfs_unsafe
from acsafe.safety import KINDS, SafetySpec, check_spec, derive_leak_targets, extract_acf, is_leaked
from acsafe.search import Exhausted, SearchBudget, fds_search
from acsafe.witness import (
    NO_LEAK,
    REPLAY_MISMATCH,
    VALID_LEAK,
    WitnessFormatError,
    dumps,
    format_trace,
    loads,
    replay_record,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXHAUSTED = 2
EXIT_MISMATCH = 3

RECORDS_SCHEMA = "acsafe-records"
RECORDS_VERSION = 1

NOT_A_PROOF = "note: an exhausted search budget is not a proof of safety"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive(text):
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="acsafe",
        description="Heuristic safety analysis for access control models.",
        epilog=f"Model names are looked up as paths, then in ${MODEL_PATH_ENV}, then among the bundled models.",
    )
    p.add_argument("--version", action="version", version=f"acsafe {__version__}")
    sub = p.add_subparsers(dest="mode", required=True, parser_class=_Parser)

    def model_args(sp, state=True):
        sp.add_argument("--model", required=True, help="model file or bundled model name")
        if state:
            sp.add_argument("--state", help="file with a 'state' (and optionally 'ext') block overriding the model's")

    def spec_args(sp, required=True):
        sp.add_argument("--safety", choices=KINDS, required=required, help="safety definition")
        sp.add_argument("--target", required=required, help="leakage target value")

    def fmt(sp, choices, default="text"):
        sp.add_argument("--format", choices=choices, default=default)

    a = sub.add_parser("analyze", help="heuristic search for a leaking sequence")
    model_args(a)
    spec_args(a)
    a.add_argument("--budget-paths", type=_positive, default=500)
    a.add_argument("--budget-len", type=_positive, default=8)
    a.add_argument("--revisits", type=int, default=2, help="extra occurrences allowed per CDG vertex")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--jobs", type=_positive, default=1)
    a.add_argument("--wall-clock", type=float, default=30.0, help="seconds")
    a.add_argument("--witness-out", help="write a replayable witness file")
    fmt(a, ("text", "records"))

    o = sub.add_parser("oracle", help="bounded breadth-first search (shortest witness)")
    model_args(o)
    spec_args(o)
    o.add_argument("--depth", type=_positive, default=6)
    o.add_argument("--max-fresh", type=int, default=2)
    o.add_argument("--max-states", type=_positive, default=100_000)
    o.add_argument("--no-symmetry", action="store_true", help="disable fresh-identifier symmetry reduction")
    o.add_argument("--seed", type=int, default=None, help="recorded in the witness header only")
    o.add_argument("--witness-out")
    fmt(o, ("text", "records"))

    s = sub.add_parser("simulate", help="execute commands, e.g. 'relabel(p1, f1, r0, t1)'")
    model_args(s)
    spec_args(s, required=False)
    s.add_argument("calls", nargs="*", help="command calls in order")
    fmt(s, ("text", "records"))

    c = sub.add_parser("cdg", help="command dependency graph")
    model_args(c)
    spec_args(c)
    fmt(c, ("dot", "text", "records"), default="dot")

    f = sub.add_parser("acf", help="access control function and leak target candidates")
    model_args(f, state=False)
    fmt(f, ("text", "records"))

    r = sub.add_parser("replay", help="re-verify a witness file")
    model_args(r)
    r.add_argument("--witness", required=True)
    fmt(r, ("text", "records"))
    return p


# -- helpers ---------------------------------------------------------------------


def load(args):
    m = find_model(args.model)
    if getattr(args, "state", None):
        path = Path(args.state)
        m = parse_model(path.read_text(), source=str(path), base=m)
    return m


def get_spec(args, m) -> SafetySpec:
    spec = SafetySpec(args.safety, args.target)
    check_spec(spec, m)
    return spec


def _record(out, record_type, **fields):
    rec = {"schema": RECORDS_SCHEMA, "version": RECORDS_VERSION, "type": record_type}
    rec.update(fields)
    out.append(json.dumps(rec, sort_keys=True))


def _header_lines(m, spec):
    lines = [f"model: {m.name} (sha256 {m.fingerprint()[:16]})"]
    if spec is not None:
        lines.append(f"safety: ({spec.kind})-unsafe, target {spec.target}")
    return lines


def _witness_text(w) -> list[str]:
    return ["witness:"] + ["  " + ln for ln in format_trace(w)]


def _witness_records(out, w):
    for i, s in enumerate(w.steps, start=1):
        _record(out, "step", step=i, command=s.command, binding=dict(s.binding), state_sha256=s.state.digest())


def _emit(lines, stream=None):
    stream = stream or sys.stdout
    stream.write("\n".join(lines) + "\n")


# -- subcommands -------------------------------------------------------------------


def cmd_analyze(args) -> int:
    m = load(args)
    spec = get_spec(args, m)
    budget = SearchBudget(
        max_paths=args.budget_paths,
        max_path_len=args.budget_len,
        max_revisits=args.revisits,
        seed=args.seed,
        wall_clock=args.wall_clock,
    )
    result = fds_search(m, spec, hooks_for(m, spec), budget, jobs=args.jobs)
    out: list[str] = []
    if isinstance(result, Exhausted):
        if args.format == "records":
            _record(out, "header", mode="analyze", model=m.name, model_sha256=m.fingerprint(),
                    safety=spec.kind, target=spec.target, seed=args.seed)
            _record(out, "result", outcome="exhausted", paths_tried=result.paths_tried,
                    states_visited=result.states_visited, reason=result.reason, safety_proof=False)
        else:
            out += _header_lines(m, spec)
            out.append(
                f"result: no leak found ({result.reason}; {result.paths_tried} paths tried, "
                f"{result.states_visited} states simulated)"
            )
            out.append(NOT_A_PROOF)
        _emit(out)
        return EXIT_EXHAUSTED
    w = result
    if args.format == "records":
        _record(out, "header", mode="analyze", model=m.name, model_sha256=m.fingerprint(),
                safety=spec.kind, target=spec.target, seed=args.seed)
        _witness_records(out, w)
        _record(out, "result", outcome="leak", length=len(w), paths_tried=w.stats["paths_tried"],
                states_visited=w.stats["states_visited"], path=w.stats["path"])
    else:
        out += _header_lines(m, spec)
        out.append(
            f"result: LEAK FOUND, {len(w)} step(s) (path {w.stats['paths_tried']} of at most "
            f"{budget.max_paths}, {w.stats['states_visited']} states simulated)"
        )
        out.append("path: " + " -> ".join(w.stats["path"]))
        out += _witness_text(w)
    if args.witness_out:
        Path(args.witness_out).write_text(dumps(m, w, seed=args.seed))
        if args.format == "text":
            out.append(f"witness written to {args.witness_out}")
    _emit(out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    m = load(args)
    spec = get_spec(args, m)
    bounds = OracleBounds(args.depth, args.max_fresh, args.max_states)
    result = bfs_unsafe(m, spec, bounds, symmetry=not args.no_symmetry)
    out: list[str] = []
    records = args.format == "records"
    if records:
        _record(out, "header", mode="oracle", model=m.name, model_sha256=m.fingerprint(),
                safety=spec.kind, target=spec.target, depth=args.depth)
    else:
        out += _header_lines(m, spec)
    if isinstance(result, (SafeWithinBounds, BoundsExceeded)):
        exceeded = isinstance(result, BoundsExceeded)
        if records:
            _record(out, "result", outcome="bounds-exceeded" if exceeded else "safe-within-bounds",
                    depth=result.depth, states=result.states,
                    complete=getattr(result, "complete", False))
        elif exceeded:
            out.append(f"result: state bound exceeded at depth {result.depth} ({result.states} states)")
        else:
            if result.complete:
                scope = f"the bounded state space, exhausted at depth {result.depth}"
            else:
                scope = f"depth {result.depth}"
            out.append(f"result: no leak within {scope} ({result.states} states, "
                       f"at most {args.max_fresh} fresh value(s) per sort)")
        _emit(out)
        return EXIT_EXHAUSTED
    w = result
    if records:
        _witness_records(out, w)
        _record(out, "result", outcome="leak", length=len(w), states=w.stats["states_visited"])
    else:
        out.append(f"result: LEAK FOUND, shortest witness has {len(w)} step(s)")
        out += _witness_text(w)
    if args.witness_out:
        Path(args.witness_out).write_text(dumps(m, w, seed=args.seed))
    _emit(out)
    return EXIT_OK


_CALL_RE = re.compile(r"^\s*([A-Za-z_][\w'.-]*)\s*\((.*)\)\s*$")


def parse_call(text: str):
    m = _CALL_RE.match(text)
    if not m:
        raise AcsafeError(f"cannot parse call {text!r}; expected name(arg, ...)")
    args = [a.strip().strip('"') for a in m.group(2).split(",")] if m.group(2).strip() else []
    return m.group(1), args


def cmd_simulate(args) -> int:
    m = load(args)
    spec = None
    if args.safety or args.target:
        if not (args.safety and args.target):
            raise AcsafeError("--safety and --target must be given together")
        spec = get_spec(args, m)
    q = m.q0
    out: list[str] = []
    records = args.format == "records"
    if records:
        _record(out, "header", mode="simulate", model=m.name, model_sha256=m.fingerprint())
    else:
        out += _header_lines(m, spec)
    for i, call in enumerate(args.calls, start=1):
        name, values = parse_call(call)
        cmd = m.command(name)
        b = cmd.binding(values)
        applied = decide(m, q, cmd, b)
        q2 = step(m, q, cmd, b)
        leaked = is_leaked(spec, m.q0, q2) if spec else None
        if records:
            fields = dict(step=i, command=name, binding=b, applied=applied, state_sha256=q2.digest())
            if spec:
                fields["leaked"] = leaked
            _record(out, "step", **fields)
        else:
            status = "applied" if applied else "PRE false, state unchanged"
            extra = f", leaked={str(leaked).lower()}" if spec else ""
            out.append(f"{i}. {cmd.id}({', '.join(values)}): {status}{extra}")
        q = q2
    if records:
        _record(out, "state", state_sha256=q.digest(), text=format_state(m.schema, q, "final"))
    else:
        out.append(format_state(m.schema, q, "final").rstrip("\n"))
    _emit(out)
    return EXIT_OK


def cmd_cdg(args) -> int:
    m = load(args)
    spec = get_spec(args, m)
    hooks = hooks_for(m, spec)
    graph, c_q = cdg_assembly(m.delta_scheme, m.q0, spec, hooks)
    if args.format == "dot":
        sys.stdout.write(graph.to_dot(f"{m.name} {spec}"))
        return EXIT_OK
    out: list[str] = []
    if args.format == "records":
        _record(out, "header", mode="cdg", model=m.name, model_sha256=m.fingerprint(),
                safety=spec.kind, target=spec.target)
        for v in graph.vertices:
            _record(out, "vertex", id=v.id, virtual=v.id in (graph.source.id, graph.sink.id))
        for a, b in graph.sorted_edges():
            _record(out, "edge", source=a, target=b)
    else:
        out += _header_lines(m, spec)
        out.append("vertices: " + ", ".join(graph.ids()))
        out += [f"  {a} -> {b}" for a, b in graph.sorted_edges()]
    _emit(out)
    return EXIT_OK


def cmd_acf(args) -> int:
    m = load(args)
    acf = extract_acf(m)
    report = derive_leak_targets(acf, m)
    out: list[str] = []
    records = args.format == "records"
    if records:
        _record(out, "header", mode="acf", model=m.name, model_sha256=m.fingerprint(),
                ar_components=list(acf.ar_components))
        for cmd_id, expr in acf.alternatives:
            _record(out, "disjunct", command=cmd_id,
                    clauses=[format_clause(c, m.schema) for c in expr])
        for g in report.groups:
            _record(out, "group", component=g.component, kind=g.kind, sort=g.sort,
                    clauses=[[c, i] for c, i in g.clauses], rr_hint=list(g.rr_hint))
        for cmd_id, idx in report.dropped:
            _record(out, "dropped", command=cmd_id, clause=idx)
    else:
        out += _header_lines(m, None)
        if not acf.ar_components or not acf.alternatives:
            sys.stderr.write("warning: no command depends on an AR-tagged component; the ACF is empty\n")
        out.append(f"AR components: {', '.join(acf.ar_components) or '-'}")
        out.append(f"ACF disjuncts: {len(acf.alternatives)}")
        for cmd_id, expr in acf.alternatives:
            out.append(f"  {cmd_id}:")
            for i, clause in enumerate(expr, start=1):
                out.append(f"    ({i}) {format_clause(clause, m.schema)}")
        out.append(f"leak target groups: {len(report.groups)}")
        for g in report.groups:
            refs = ", ".join(f"{c}.{i}" for c, i in g.clauses)
            kind = g.kind or "unclassified"
            if g.rr_hint:
                hint = "relabeled via " + ", ".join(g.rr_hint)
            else:
                hint = "no RR component changes it; likely only reachable through creation"
            out.append(f"  {g.component}: kind {kind} (clauses {refs}); hint: {hint}")
        if report.dropped:
            out.append("ignored (static only): " + ", ".join(f"{c}.{i}" for c, i in report.dropped))
    _emit(out)
    return EXIT_OK


def cmd_replay(args) -> int:
    m = load(args)
    try:
        record = loads(Path(args.witness).read_text())
    except WitnessFormatError as exc:
        raise AcsafeError(str(exc)) from None
    check_spec(record.spec, m)
    rep = replay_record(m, record)
    out: list[str] = []
    if args.format == "records":
        _record(out, "result", verdict=rep.verdict, steps_replayed=rep.steps_replayed,
                message=rep.message, model_matches=rep.model_matches)
    else:
        out.append(f"verdict: {rep.verdict} ({rep.steps_replayed} of {len(record.steps)} steps replayed)")
        if rep.message:
            out.append(rep.message)
        if not rep.model_matches:
            out.append("warning: witness was produced for a different model text")
    _emit(out)
    return {VALID_LEAK: EXIT_OK, NO_LEAK: EXIT_EXHAUSTED, REPLAY_MISMATCH: EXIT_MISMATCH}[rep.verdict]


COMMANDS = {
    "analyze": cmd_analyze,
    "oracle": cmd_oracle,
    "simulate": cmd_simulate,
    "cdg": cmd_cdg,
    "acf": cmd_acf,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.mode](args)
    except (AcsafeError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
