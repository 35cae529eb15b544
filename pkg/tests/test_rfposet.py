import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from syncp.oracle_bf import is_predictable_race_bf
from syncp.rfposet import (NormalizationError, RfEvent, RfPoset, build_race_instance,
                           build_reverse_instance, dominant_pairs, gen_rfposet, is_normalized,
                           normalize, realizability_bf, realizes, reverse_realizability_bf)


def poset(spec, order=(), rf=None, lam=None):
    """spec: 'id thread op var' entries separated by ';'."""
    events = [RfEvent(int(i), t, op, v) for i, t, op, v in (s.split() for s in spec.split(";"))]
    return RfPoset(events, list(order), rf or {}, lam)


FIG6A = poset("1 t1 w x1; 2 t1 w x2; 3 t1 r x1; 4 t2 w x2; 5 t2 w x1; 6 t2 r x2",
              [(2, 5), (3, 6)], {3: 1, 6: 4})
FIG7A = poset("1 t1 w x1; 2 t1 r x1; 3 t2 w x2; 4 t2 r x2; 5 t3 w x1; 6 t4 w x2",
              [(6, 5)], {2: 1, 4: 3}, (3, 4, 6))
FIG7B = [
    ("t4", "acq", "l"), ("t4", "w", "x2"), ("t4", "w", "x[6,5]"), ("t4", "w", "y"),
    ("t4", "rel", "l"), ("t3", "r", "x[6,5]"), ("t3", "w", "x1"), ("t3", "w", "x^t3"),
    ("t2", "acq", "l"), ("t2", "w", "x2"), ("t2", "rel", "l"), ("t2", "r", "x2"),
    ("t1", "w", "x1"), ("t1", "r", "x1"), ("t1", "w", "x^t1"), ("t2", "r", "x^t1"),
    ("t2", "r", "x^t3"), ("t2", "r", "y"),
]


def test_poset_invariants():
    with pytest.raises(ValueError):
        poset("1 a w x; 2 b w x", [(1, 2), (2, 1)])
    with pytest.raises(ValueError):
        poset("1 a w x; 2 b r y", rf={2: 1})  # different variable
    with pytest.raises(ValueError):
        poset("1 a w x; 2 a r x; 3 a w x", rf={2: 1}, lam=(1, 2, 3))  # w' in w's thread
    p = poset("1 a w x; 2 a r x; 3 b w x", [(1, 3)], {2: 1})
    assert p.less(1, 2) and p.less(1, 3) and not p.less(2, 3)
    assert list(p.triplets()) == [(1, 2, 3)]


def test_dominant_pairs():
    p = poset("1 a w x; 2 a w y; 3 b w x; 4 b w y", [(1, 3), (2, 4), (1, 4)])
    assert sorted(dominant_pairs(p)) == [(1, 3), (2, 4)]  # (1, 4) is implied
    assert dominant_pairs(poset("1 a w x; 2 b w x", [(1, 2)])) == [(1, 2)]
    assert dominant_pairs(poset("1 a w x; 2 b w x")) == []
    assert sorted(dominant_pairs(FIG6A)) == [(2, 5), (3, 6)]


def test_dominance_drops_implied_pairs():
    p = poset("1 a w x; 2 a w y; 3 b w x; 4 b w y", [(2, 3)])
    # 1 < 4 is implied through the tighter pair (2, 3)
    assert dominant_pairs(p) == [(2, 3)]


def test_realizability_examples():
    assert realizability_bf(poset("1 a w x; 2 b r x", [(1, 2)], {2: 1})) == [1, 2]
    blocked = poset("1 a w x; 2 b w x; 3 c r x", [(1, 2), (2, 3)], {3: 1})
    assert realizability_bf(blocked) is None
    seq = realizability_bf(FIG6A)
    assert seq is not None and realizes(FIG6A, seq)


def test_reverse_realizability_examples():
    forced = poset("1 a w x; 2 a r x; 3 b w x", [(3, 1)], {2: 1}, (1, 2, 3))
    assert not reverse_realizability_bf(forced)
    free = poset("1 a w x; 2 a r x; 3 b w x", [], {2: 1}, (1, 2, 3))
    assert reverse_realizability_bf(free)
    assert reverse_realizability_bf(FIG7A) == (realizability_bf(FIG7A) is not None)
    with pytest.raises(ValueError):
        reverse_realizability_bf(FIG6A)


def test_normalize_rejects_remote_reads():
    with pytest.raises(NormalizationError):
        normalize(poset("1 a w x; 2 b r x", [(1, 2)], {2: 1}))
    with pytest.raises(NormalizationError):
        normalize(poset("1 a w x; 2 a w x; 3 a r x", [], {3: 1}))


def test_normalize_projects_onto_triplets():
    p = poset("1 a w x; 2 a w z; 3 a r x; 4 b w x; 5 b w y", [(2, 4), (1, 5)], {3: 1})
    n = normalize(p)
    assert sorted(e.id for e in n.events) == [1, 3, 4]
    assert is_normalized(n)
    assert n.less(1, 4)  # kept through the dropped event 2


def test_fig6_reverse_instance_shape():
    inst = build_reverse_instance(FIG6A)
    threads = inst.poset.threads
    assert inst.pairs == [(2, 5), (3, 6)]
    groups = {t[0] for t in threads}
    assert {"t", "X", "Y", "l"} == groups  # 2 original, X/Y gadgets, two λ threads
    assert sum(t.startswith(("X", "Y")) for t in threads) == 2
    assert realizes(inst.poset, inst.witness)
    assert reverse_realizability_bf(inst.poset, max_events=20)


def test_zero_dominant_pairs_reverse_trivially():
    p = poset("1 a w x; 2 a r x; 3 b w x", [], {2: 1})
    inst = build_reverse_instance(p)
    assert inst.pairs == [] and reverse_realizability_bf(inst.poset)


def test_unnormalized_input_rejected():
    with pytest.raises(NormalizationError):
        build_reverse_instance(poset("1 a w x; 2 a w y", []))


def test_fig7b_race_instance():
    trace, pair = build_race_instance((FIG7A, [6, 5, 3, 4, 1, 2]))
    assert [r[:3] for r in trace.records()] == FIG7B
    assert pair == (4, 18)
    assert is_predictable_race_bf(trace, *pair)


def test_race_instance_needs_realizing_witness():
    with pytest.raises(ValueError):
        build_race_instance((FIG7A, [1, 2, 3, 4, 5, 6]))


def test_minimal_race_instance():
    lam_only = poset("1 a w x; 2 a r x; 3 b w x", [], {2: 1}, (1, 2, 3))
    trace, pair = build_race_instance((lam_only, [3, 1, 2]))
    assert is_predictable_race_bf(trace, *pair) == reverse_realizability_bf(lam_only)


def test_chained_gadget_layout_counterexample():
    p = gen_rfposet(20)
    assert realizability_bf(p) is not None
    assert not reverse_realizability_bf(build_reverse_instance(p, "chained").poset, max_events=60)
    assert reverse_realizability_bf(build_reverse_instance(p).poset, max_events=60)


@settings(max_examples=60)
@given(st.integers(0, 10**6), st.integers(2, 3), st.sampled_from((0.2, 0.4, 0.6)))
def test_hardness_chain(seed, n_threads, p_edge):
    p = gen_rfposet(seed, n_events=8, n_threads=n_threads, n_vars=2, p_edge=p_edge)
    inst = build_reverse_instance(p)
    realizable = realizability_bf(p) is not None
    assert reverse_realizability_bf(inst.poset, max_events=60) == realizable
    trace, pair = build_race_instance(inst)
    assert is_predictable_race_bf(trace, *pair, max_events=400) == realizable
