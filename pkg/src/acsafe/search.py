"""Dynamic analysis: CDG path generation, parameter assignment and the search loop.

Paths run from the source to the sink of the CDG.  For every path a
binding per command occurrence is chosen by forward simulation, the path
is executed from the initial state, and the leak predicate is tested after
every transition.
"""

from __future__ import annotations

import itertools
import random
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from acsafe.cdg import SINK_ID, SOURCE_ID, cdg_assembly, hooks_for
from acsafe.core import Command, step
from acsafe.logic import Membership, Var, clause_terms, clauses_of, solve
from acsafe.state import next_fresh, values_by_sort
from acsafe.witness import Witness, make_step


@dataclass(frozen=True)
class SearchBudget:
    max_paths: int = 500
    max_path_len: int = 8
    max_revisits: int = 2
    seed: int = 0
    wall_clock: float = 30.0
    max_retries: int = 256
    max_candidates: int = 512

    def __post_init__(self):
        for name in ("max_paths", "max_path_len", "max_retries", "max_candidates"):
            if getattr(self, name) <= 0:
                raise ValueError(f"budget {name} must be positive")
        if self.max_revisits < 0:
            raise ValueError("budget max_revisits must not be negative")
        if not self.wall_clock > 0:
            raise ValueError("budget wall_clock must be positive")


@dataclass(frozen=True)
class Exhausted:
    """The budget ran out without a leak.  This is not a proof of safety."""

    paths_tried: int
    states_visited: int
    reason: str
    stats: dict = field(default_factory=dict)


# -- path generation ------------------------------------------------------------


def _successor_map(cdg, c_q):
    succ = {v.id: [] for v in cdg.vertices}
    succ.setdefault(c_q.id, [])
    for a, b in cdg.sorted_edges():
        succ.setdefault(a, []).append(b)
    # vertices nothing else establishes can only start right after the source
    indeg = {v.id: 0 for v in cdg.vertices}
    for _, b in cdg.edges:
        indeg[b] = indeg.get(b, 0) + 1
    for v in cdg.vertices:
        if v.id not in (c_q.id, SINK_ID) and indeg[v.id] == 0 and v.id not in succ[c_q.id]:
            succ[c_q.id].append(v.id)
    return succ


def _distances(succ, sink):
    pred: dict[str, list[str]] = {}
    for a, bs in succ.items():
        for b in bs:
            pred.setdefault(b, []).append(a)
    dist = {sink: 0}
    todo = deque([sink])
    while todo:
        v = todo.popleft()
        for a in pred.get(v, ()):
            if a not in dist:
                dist[a] = dist[v] + 1
                todo.append(a)
    return dist


def cdg_path_generation(cdg, c_q, budget: SearchBudget = SearchBudget(), rng=None):
    """Yield distinct source-to-sink paths (lists of vertex ids), shortest first.

    Each vertex may occur at most ``1 + max_revisits`` times in a path.
    Successor order within one length is shuffled by ``rng``.
    """
    rng = rng if rng is not None else random.Random(budget.seed)
    succ = _successor_map(cdg, c_q)
    sink = cdg.sink.id
    dist = _distances(succ, sink)
    if c_q.id not in dist:
        return
    cap = 1 + budget.max_revisits
    counts: dict[str, int] = {}

    def extend(v, path, remaining):
        nexts = succ.get(v, [])
        if remaining == 0:
            if sink in nexts:
                yield path + [sink]
            return
        options = [w for w in nexts if w not in (sink, c_q.id)]
        rng.shuffle(options)
        for w in options:
            if counts.get(w, 0) >= cap or w not in dist or dist[w] > remaining:
                continue
            counts[w] = counts.get(w, 0) + 1
            yield from extend(w, path + [w], remaining - 1)
            counts[w] -= 1

    for length in range(0, budget.max_path_len + 1):
        yield from extend(c_q.id, [c_q.id], length)


# -- parameter assignment -------------------------------------------------------


def _param_roles(cmd: Command):
    positive, negated = set(), set()
    for clause in clauses_of(cmd.pre):
        names = {t.name for t in clause_terms(clause) if isinstance(t, Var)}
        if isinstance(clause, Membership) and clause.negated:
            negated |= names
        else:
            positive |= names
    return positive, negated


def _universe(model, q, sort, used, hints):
    carrier = model.schema.carrier(sort)
    if carrier is not None:
        return sorted(t[0] for t in model.ext[carrier.name])
    vals = set(values_by_sort(model.schema, q).get(sort, ()))
    vals |= values_by_sort(model.schema, model.ext).get(sort, set())
    vals |= model.schema.consts_of_sort(sort)
    vals |= {h for h, s in hints if s == sort}
    return sorted(vals) + [next_fresh(used)]


def _used_values(model, q):
    used = set()
    for vals in values_by_sort(model.schema, q).values():
        used |= vals
    for vals in values_by_sort(model.schema, model.ext).values():
        used |= vals
    used |= {v for v, _ in model.schema.consts}
    return used


def candidate_bindings(model, q, cmd: Command, hints=(), limit=512):
    """Bindings of ``cmd``'s parameters under which PRE holds in ``q`` (sorted, at most ``limit``).

    Parameters only constrained by freshness clauses get a hinted value not
    in use, or the next fresh identifier; parameters PRE does not mention
    range over their sort.
    """
    positive, negated = _param_roles(cmd)
    used = _used_values(model, q)
    options = {}
    for name, sort in cmd.params:
        if name in positive:
            continue
        if name in negated:
            fresh = [h for h, s in hints if s == sort and h not in used]
            options[name] = fresh + [next_fresh(used)]
        else:
            options[name] = _universe(model, q, sort, used, hints)
    clauses = sorted(
        clauses_of(cmd.pre), key=lambda c: isinstance(c, Membership) and c.negated
    )
    names = list(options)
    seen = set()
    out = []
    for combo in itertools.product(*(options[n] for n in names)):
        partial = dict(zip(names, combo))
        for sol in solve(clauses, q, model.ext, partial):
            b = tuple(sol[p] for p in cmd.param_names)
            if b in seen:
                continue
            seen.add(b)
            out.append(dict(zip(cmd.param_names, b)))
            if len(out) >= limit:
                return out
    return out


class _Stop(Exception):
    pass


def _changed(prev_q, q):
    from acsafe.state import changed_values

    return changed_values(prev_q, q) if prev_q is not None else set()


def assign_params(model, q, path, rng, accept=None, hints=(), max_retries=256, max_candidates=512, stats=None):
    """Choose bindings for the commands of ``path`` by forward simulation.

    Candidates at each position satisfy PRE in the simulated state; they are
    ranked by how many of their values the previous transition touched (and
    by hint values such as the leak target), ties broken by ``rng``.
    Candidates that would leave the state unchanged are skipped, and the
    search backtracks on dead ends until ``max_retries`` transitions were
    simulated.

    Returns the bindings of the first assignment under which the simulated
    state satisfies ``accept`` (possibly before the end of the path), else the
    first assignment that executes the whole path, else None.
    """
    cmds = [c for c in path if c.id not in (SOURCE_ID, SINK_ID)]
    hint_values = {h for h, _ in hints}
    attempts = 0
    first_full = None
    found = None

    def rank(cands, prev_q, cur_q):
        touched = _changed(prev_q, cur_q)
        known = _used_values(model, cur_q) | hint_values
        keyed = []
        for b in cands:
            vals = set(b.values())
            score = len(vals & touched) + 2 * len(vals & hint_values)
            # on ties, existing values before invented ones
            keyed.append((-score, len(vals - known), rng.random(), b))
        keyed.sort(key=lambda x: x[:3])
        return [x[-1] for x in keyed]

    def dfs(i, cur_q, prev_q, acc):
        nonlocal attempts, first_full, found
        if i == len(cmds):
            if first_full is None:
                first_full = list(acc)
            return accept is None
        cands = candidate_bindings(model, cur_q, cmds[i], hints, max_candidates)
        for b in rank(cands, prev_q, cur_q):
            attempts += 1
            if attempts > max_retries:
                raise _Stop
            nxt = step(model, cur_q, cmds[i], b)
            if stats is not None:
                stats["states_visited"] = stats.get("states_visited", 0) + 1
            if nxt == cur_q:
                continue
            acc.append(b)
            if accept is not None and accept(nxt):
                found = list(acc)
                return True
            if dfs(i + 1, nxt, cur_q, acc):
                return True
            acc.pop()
        return False

    try:
        dfs(0, q, None, [])
    except _Stop:
        pass
    if found is not None:
        return found
    return first_full


# -- main loop --------------------------------------------------------------------


def _hints(spec, model):
    return ((spec.target, spec.target_sort),)


def _execute(model, spec, hooks, q0, path_cmds, bindings):
    """Run a path from ``q0``; returns (steps, leaked).  Stops at the first leak or no-op."""
    q = q0
    steps = []
    cmds = [c for c in path_cmds if c.id != SINK_ID]
    if cmds and cmds[0].id == SOURCE_ID:
        q = step(model, q, cmds[0], {})
        cmds = cmds[1:]
    for cmd, b in zip(cmds, bindings):
        nxt = step(model, q, cmd, b)
        if nxt == q:
            return steps, False
        steps.append(make_step(cmd, b, nxt))
        q = nxt
        if hooks.is_leaked(spec, q0, q):
            return steps, True
    return steps, False


def _try_path(model, spec, hooks, budget, cdg, idx, path_ids):
    path = [cdg.vertex(i) if i != cdg.source.id else cdg.source for i in path_ids]
    rng = random.Random(f"{budget.seed}:{idx}")
    stats = {"states_visited": 0}
    q0 = model.q0

    def accept(q):
        return hooks.is_leaked(spec, q0, q)

    bindings = hooks.assign_params(
        model, q0, path, rng, accept=accept, hints=_hints(spec, model),
        max_retries=budget.max_retries, max_candidates=budget.max_candidates, stats=stats,
    )
    if bindings is None:
        return None, stats["states_visited"]
    steps, leaked = _execute(model, spec, hooks, q0, path, bindings)
    visited = stats["states_visited"] + len(steps)
    return (steps if leaked else None), visited


_WORKER = {}


def _worker_init(model, spec, hooks, budget, cdg):
    _WORKER.update(model=model, spec=spec, hooks=hooks, budget=budget, cdg=cdg)


def _worker_try(item):
    idx, path_ids = item
    w = _WORKER
    return _try_path(w["model"], w["spec"], w["hooks"], w["budget"], w["cdg"], idx, path_ids)


def fds_search(model, spec, hooks=None, budget: SearchBudget = SearchBudget(), jobs: int = 1):
    """Search for a transition sequence from ``model.q0`` that leaks ``spec``.

    Returns a :class:`Witness` or :class:`Exhausted`.  With ``jobs > 1`` paths
    are tried in parallel batches and the leak of the lowest path index wins,
    so the outcome equals the sequential one.
    """
    hooks = hooks or hooks_for(model, spec)
    q0 = model.q0
    cdg, c_q = cdg_assembly(model.delta_scheme, q0, spec, hooks)
    paths = cdg_path_generation(cdg, c_q, budget, random.Random(budget.seed))
    deadline = time.monotonic() + budget.wall_clock
    base_stats = {"cdg_vertices": len(cdg.vertices), "cdg_edges": len(cdg.edges)}
    visited = 0
    tried = 0

    def witness(idx, path_ids, steps):
        stats = dict(base_stats, paths_tried=idx + 1, states_visited=visited, path=list(path_ids))
        return Witness(q0, tuple(steps), spec, stats)

    if jobs <= 1:
        for idx, path_ids in enumerate(paths):
            if idx >= budget.max_paths:
                return Exhausted(tried, visited, "path budget exhausted", base_stats)
            if time.monotonic() > deadline:
                return Exhausted(tried, visited, "wall-clock limit reached", base_stats)
            steps, n = _try_path(model, spec, hooks, budget, cdg, idx, path_ids)
            tried += 1
            visited += n
            if steps is not None:
                return witness(idx, path_ids, steps)
        return Exhausted(tried, visited, "no further CDG paths", base_stats)

    batch_size = jobs * 8
    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_worker_init, initargs=(model, spec, hooks, budget, cdg)
    ) as pool:
        indexed = enumerate(paths)
        while True:
            if time.monotonic() > deadline:
                return Exhausted(tried, visited, "wall-clock limit reached", base_stats)
            batch = list(itertools.islice(indexed, batch_size))
            batch = [(i, p) for i, p in batch if i < budget.max_paths]
            if not batch:
                reason = "path budget exhausted" if tried >= budget.max_paths else "no further CDG paths"
                return Exhausted(tried, visited, reason, base_stats)
            for (idx, path_ids), (steps, n) in zip(batch, pool.map(_worker_try, batch)):
                tried += 1
                visited += n
                if steps is not None:
                    return witness(idx, path_ids, steps)
