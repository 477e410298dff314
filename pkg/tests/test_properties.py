"""Cross-module invariants checked on generated models and states."""

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from modelgen import generate
from oracles import edge_justified, replay_states

from acsafe.cdg import SINK_ID, SOURCE_ID, cdg_assembly, hooks_for
from acsafe.core import decide, step
from acsafe.logic import Truth
from acsafe.oracle import OracleBounds, bfs_unsafe
from acsafe.safety import is_leaked
from acsafe.search import SearchBudget, fds_search
from acsafe.witness import Witness


def post_components(cmd):
    return {c.component for c in cmd.post if not isinstance(c, Truth)}


def random_binding(rng, model, q, cmd):
    pool = {}
    for sort in model.schema.sorts:
        carrier = model.schema.carrier(sort)
        if carrier is not None:
            pool[sort] = sorted(t[0] for t in model.ext[carrier.name])
    ents = sorted(e for (e,) in q["E"]) + ["fresh-0"]
    pool["entity"] = ents
    return {p: rng.choice(pool[s]) for p, s in cmd.params}


@settings(max_examples=30)
@given(seed=st.integers(0, 100_000))
def test_frame_rule_on_generated_models(seed):
    case = generate(seed)
    rng = random.Random(seed)
    q = case.model.q0
    for _ in range(6):
        cmd = rng.choice(list(case.model.delta_scheme))
        b = random_binding(rng, case.model, q, cmd)
        q2 = step(case.model, q, cmd, b)
        if q2 != q:
            assert decide(case.model, q, cmd, b)
        for name in q.names():
            if name not in post_components(cmd):
                assert q2[name] == q[name]
        q = q2


@settings(max_examples=20)
@given(seed=st.integers(0, 100_000))
def test_cdg_invariants_on_generated_models(seed):
    case = generate(seed)
    hooks = hooks_for(case.model, case.spec)
    cdg, c_q = cdg_assembly(case.model.delta_scheme, case.model.q0, case.spec, hooks)
    assert cdg.out_degree(SINK_ID) == 0
    assert cdg.in_degree(SOURCE_ID) == 0
    assert len(cdg.ids()) == len(set(cdg.ids()))
    for a, b in cdg.edges:
        assert edge_justified(cdg.vertex(a), cdg.vertex(b)), (a, b)


@settings(max_examples=15)
@given(seed=st.integers(0, 100_000), search_seed=st.integers(0, 3))
def test_heuristic_witnesses_are_sound(seed, search_seed):
    case = generate(seed)
    res = fds_search(case.model, case.spec, budget=SearchBudget(max_paths=200, seed=search_seed))
    if isinstance(res, Witness):
        states = replay_states(case.model, case.model.q0, res.inputs())
        assert states == [s.state for s in res.steps]
        assert is_leaked(case.spec, case.model.q0, res.final)


@settings(max_examples=10)
@given(seed=st.integers(0, 100_000))
def test_heuristic_is_deterministic(seed):
    case = generate(seed)
    budget = SearchBudget(max_paths=100, seed=seed % 7)
    a = fds_search(case.model, case.spec, budget=budget)
    b = fds_search(case.model, case.spec, budget=budget)
    assert a == b


@settings(max_examples=10)
@given(seed=st.integers(0, 100_000))
def test_oracle_and_heuristic_agree(seed):
    case = generate(seed)
    o = bfs_unsafe(case.model, case.spec, OracleBounds(max_depth=3))
    if isinstance(o, Witness):
        h = fds_search(case.model, case.spec, budget=SearchBudget(max_paths=2000))
        assert isinstance(h, Witness)
        assert len(h) >= len(o)
