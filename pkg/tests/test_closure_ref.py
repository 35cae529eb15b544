from hypothesis import given
from hypothesis import strategies as st

from conftest import fixture, small_traces, tr
from syncp.closure_ref import (is_syncp_race_pair, race_pairs, racy_partners, sp_closure,
                               sp_ideal, syncp_races_with_thread, tl_closure)
from syncp.oracle_bf import is_syncp_race_bf
from syncp.trace_model import Kind, conflicting, last_write


def saturate(trace, seeds, sync_rule):
    """Naive fixpoint: re-scan every event until nothing new can be added."""
    s = set(seeds)
    while True:
        add = set()
        for e in s:
            add.update(p for p in trace.to_parents[e] if p not in s)
            if trace[e].kind == Kind.READ:
                w = last_write(trace, e)
                if w is not None and w not in s:
                    add.add(w)
        if sync_rule:
            for lk in range(trace.L):
                acqs = sorted(a for a in s if trace[a].kind == Kind.ACQUIRE and trace[a].target == lk)
                for a in acqs[:-1]:
                    m = trace.match[a]
                    if m and m not in s:
                        add.add(m)
        if not add:
            return frozenset(s)
        s |= add


def test_tl_closure_examples():
    assert tl_closure(fixture("sigma2"), {5}) == {4, 5}
    assert tl_closure(fixture("sigma2"), set()) == frozenset()
    assert tl_closure(fixture("sigmaC"), {6}) == {1, 2, 3, 5, 6}


def test_sp_closure_examples():
    s2 = fixture("sigma2")
    assert sp_closure(s2, set()) == frozenset()
    assert 3 in sp_closure(s2, {2, 4})
    assert sp_closure(s2, {4, 5}) == {4, 5}


def test_sp_ideal_examples():
    assert sp_ideal(fixture("sigma2"), 1, 6) == {4, 5}
    assert sp_ideal(tr("t1 w x; t2 w x"), 1, 2) == frozenset()
    ideal = sp_ideal(fixture("sigmaB"), 3, 6)
    assert {2, 5, 4, 3} <= ideal


def test_algorithm1_examples():
    assert is_syncp_race_pair(fixture("sigma2"), 1, 6)
    assert not is_syncp_race_pair(fixture("sigmaB"), 3, 6)
    assert not is_syncp_race_pair(fixture("sigmaC"), 1, 8)


def test_algorithm2_examples():
    s4 = fixture("sigma4")
    assert syncp_races_with_thread(s4, 8, 0) == 1
    assert syncp_races_with_thread(s4, 8, 1) is None
    assert syncp_races_with_thread(tr("t1 w y; t2 w x"), 2, 0) is None


def test_race_pairs_and_partners_agree():
    s4 = fixture("sigma4")
    assert race_pairs(s4) == {(1, 5), (1, 8)}
    assert racy_partners(s4) == {5: 1, 8: 1}


@given(small_traces(), st.data())
def test_closures_match_naive_saturation(t, data):
    if len(t) == 0:
        return
    s = data.draw(st.sets(st.integers(1, len(t)), max_size=4))
    assert tl_closure(t, s) == saturate(t, s, False)
    assert sp_closure(t, s) == saturate(t, s, True)


@given(small_traces(), st.data())
def test_closure_algebra(t, data):
    if len(t) == 0:
        return
    sets = st.sets(st.integers(1, len(t)), max_size=4)
    s1 = data.draw(sets)
    s2 = s1 | data.draw(sets)
    for close in (tl_closure, sp_closure):
        c1 = close(t, s1)
        assert s1 <= c1
        assert c1 <= close(t, s2)
        assert close(t, c1) == c1


@given(small_traces(max_events=14))
def test_ideal_monotone_and_consumed_events(t):
    accs = [e for e in range(1, len(t) + 1) if t[e].kind <= Kind.WRITE]
    for e1 in accs:
        for e2 in accs:
            if e1 >= e2 or not conflicting(t, e1, e2):
                continue
            ideal = sp_ideal(t, e1, e2)
            later = [f for f in accs if f > e2 and t[f].thread == t[e2].thread]
            for f in later:
                assert ideal <= sp_ideal(t, e1, f)
                if conflicting(t, e1, f) and not is_syncp_race_pair(t, e1, e2):
                    assert not is_syncp_race_pair(t, e1, f)


@given(small_traces(max_events=12))
def test_pair_check_matches_search_oracle(t):
    for e1 in range(1, len(t) + 1):
        for e2 in range(e1 + 1, len(t) + 1):
            if conflicting(t, e1, e2):
                assert is_syncp_race_pair(t, e1, e2) == is_syncp_race_bf(t, e1, e2)
