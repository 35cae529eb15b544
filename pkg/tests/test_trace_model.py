import numpy as np
import pytest
from hypothesis import given

from conftest import fixture, small_traces, tr
from syncp.trace_model import (Kind, Trace, TraceError, check_valid, conflicting, enabled,
                               is_prefix, last_write, locks_held, match_of, prev_of, validate)


def rules(trace):
    return [(v.idx, v.rule) for v in validate(trace)]


def test_well_formed_fixtures_validate_clean():
    for name in ("sigmaA", "sigmaB", "sigmaC", "sigma2", "sdp", "empty"):
        assert validate(fixture(name)) == []


def test_release_by_other_thread():
    t = Trace.from_records([("t1", "acq", "l"), ("t2", "rel", "l")])
    assert rules(t) == [(2, "release without matching acquire in thread")]


@pytest.mark.parametrize("text, expected", [
    ("t1 acq l; t1 acq l", [(2, "reentrant acquire")]),
    ("t1 acq l; t2 acq l", [(2, "acquire of a lock held by another thread")]),
    ("t1 rel l", [(1, "release without matching acquire in thread")]),
    ("t1 fork t1", [(1, "fork of self")]),
    ("t1 fork t2; t1 fork t2", [(2, "thread forked twice")]),
    ("t2 w x; t1 fork t2", [(2, "fork of an already-started thread")]),
    ("t1 join t1", [(1, "join of self")]),
    ("t1 join t2; t1 join t2", [(2, "thread joined twice")]),
    ("t1 fork t2; t1 join t2; t2 w x", [(3, "event of a thread after it was joined")]),
])
def test_violation_rules(text, expected):
    t = Trace.from_records([tuple(p.split()) for p in text.split(";")])
    assert rules(t) == expected
    with pytest.raises(TraceError):
        check_valid(t)


def test_out_of_range_ids_are_violations_not_crashes():
    t = Trace([0, 0], [Kind.WRITE, Kind.ACQUIRE], [0, 0])
    t2 = Trace(t.threads, np.array([Kind.WRITE, 9], dtype=np.int8), t.targets)
    assert rules(t2) == [(2, "unknown event kind")]


def test_trailing_open_acquire_is_legal():
    t = tr("t1 acq l; t1 w x")
    assert validate(t) == []
    assert match_of(t, 1) is None


def test_conflicting():
    a = fixture("sigmaA")
    assert conflicting(a, 5, 6)
    t = tr("t1 w x; t1 w x; t1 r y; t2 r y")
    assert not conflicting(t, 1, 2)
    assert not conflicting(t, 3, 4)


def test_locks_held():
    b = fixture("sigmaB")
    assert locks_held(b, 3) == {0}
    assert locks_held(b, 1) == frozenset()
    assert 0 in locks_held(b, 2)  # an acquire holds its own lock


def test_last_write():
    c = fixture("sigmaC")
    assert last_write(c, 6) == 3
    t = tr("t1 r x; t1 w x; t1 r x")
    assert last_write(t, 1) is None
    assert last_write(t, 3) == 2


def test_prev_match_enabled():
    a = fixture("sigmaA")
    assert enabled(a, {1, 2, 3, 4}, 5) and enabled(a, {1, 2, 3, 4}, 6)
    assert enabled(a, set(), 1) and enabled(a, set(), 3)
    assert not enabled(a, set(), 2)
    b = fixture("sigmaB")
    assert match_of(b, 2) == 4 and match_of(b, 4) == 2
    assert prev_of(b, 5) is None and prev_of(b, 3) == 2


def test_fork_join_extend_thread_order():
    t = tr("t1 w x; t1 fork t2; t2 w x; t2 w y; t1 join t2; t1 r y")
    assert 2 in t.to_parents[3]
    assert 4 in t.to_parents[5]
    assert is_prefix(t, {1, 2, 3})
    assert not is_prefix(t, {3})


def test_counts():
    b = fixture("sigmaB")
    assert (b.N, b.T, b.L, b.V, b.A) == (7, 2, 1, 1, 2)


@given(small_traces(max_events=16, fork_join=True))
def test_last_write_and_match_invariants(t):
    for e in range(1, len(t) + 1):
        if t[e].kind == Kind.READ:
            w = last_write(t, e)
            if w is not None:
                assert w < e and t[w].kind == Kind.WRITE and t[w].target == t[e].target
                assert not any(t[f].kind == Kind.WRITE and t[f].target == t[e].target
                               for f in range(w + 1, e))
        m = match_of(t, e)
        if m is not None:
            assert match_of(t, m) == e


@given(small_traces(max_events=16))
def test_records_roundtrip(t):
    assert Trace.from_records(t.records()) == t
