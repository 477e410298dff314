import pytest

from acsafe.errors import EvalError
from acsafe.safety import SafetySpec
from acsafe.search import fds_search
from acsafe.witness import (
    NO_LEAK,
    REPLAY_MISMATCH,
    VALID_LEAK,
    Witness,
    WitnessFormatError,
    dumps,
    format_trace,
    loads,
    make_step,
    replay,
    replay_record,
    verify,
)


@pytest.fixture(scope="module")
def one(onestep):
    return fds_search(onestep, SafetySpec("t", "t1"))


def test_trace_lines(one):
    assert format_trace(one) == ["1. relabel  [e=p1, f=f1, r'=r0, t'=t1]  changed: con"]


def test_verify(onestep, one):
    assert verify(onestep, one) == VALID_LEAK
    truncated = Witness(one.q0, (), one.spec)
    assert verify(onestep, truncated) == NO_LEAK
    bad = Witness(one.q0, (make_step(onestep.command("relabel"), {"e": "p1", "f": "f1", "r'": "r0", "t'": "t0"}, one.final),), one.spec)
    assert replay(onestep, bad)[0] is False
    assert verify(onestep, bad) == REPLAY_MISMATCH


def test_file_round_trip(onestep, one):
    text = dumps(onestep, one, seed=0)
    assert text == dumps(onestep, one, seed=0)
    rec = loads(text)
    assert rec.header["steps"] == 1 and rec.header["seed"] == 0
    report = replay_record(onestep, rec)
    assert report.verdict == VALID_LEAK and report.model_matches


def test_tampered_binding(onestep, one):
    text = dumps(onestep, one).replace('"t\'": "t1"', '"t\'": "tf"')
    assert replay_record(onestep, loads(text)).verdict == REPLAY_MISMATCH


def test_truncated(onestep, one):
    header = dumps(onestep, one).splitlines()[0]
    assert replay_record(onestep, loads(header)).verdict == NO_LEAK


def test_unknown_command(onestep, one):
    text = dumps(onestep, one).replace('"command": "relabel"', '"command": "nope"')
    with pytest.raises(EvalError):
        replay_record(onestep, loads(text))


@pytest.mark.parametrize("text", ["", "not json", '{"format": "other"}', '{"format": "acsafe-witness", "version": 99}'])
def test_bad_files(text):
    with pytest.raises(WitnessFormatError):
        loads(text)


def test_other_initial_state(onestep, unreachable, one):
    # the unreachable instance has the same schema and q0 but no type transition
    report = replay_record(unreachable, loads(dumps(onestep, one)))
    assert report.verdict == REPLAY_MISMATCH
    assert not report.model_matches
