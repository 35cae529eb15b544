import pytest
from hypothesis import given
from hypothesis import strategies as st

from syncp.closure_ref import tl_closure
from syncp.vclock import bottom, bump, join, leq, with_

from conftest import small_traces

vecs = st.lists(st.integers(0, 9), min_size=3, max_size=3).map(tuple)


@given(vecs, vecs, vecs)
def test_join_is_least_upper_bound(a, b, c):
    j = join(a, b)
    assert leq(a, j) and leq(b, j)
    if leq(a, c) and leq(b, c):
        assert leq(j, c)
    assert join(a, b) == join(b, a)
    assert join(a, a) == a


def test_basic_ops():
    assert bottom(3) == (0, 0, 0)
    assert bump((1, 2), 1) == (1, 3)
    assert with_((1, 2), 0, 5) == (5, 2)
    with pytest.raises(ValueError):
        join((1,), (1, 2))
    with pytest.raises(IndexError):
        with_((0,), 3, 1)


def _timestamp(trace, events):
    """Per-thread count of events in a set: what a timestamp stores for a closed set."""
    v = [0] * trace.T
    for e in events:
        v[trace[e].thread] += 1
    return tuple(v)


@given(small_traces(max_events=10), st.data())
def test_timestamp_order_matches_set_inclusion(t, data):
    # for closed sets, set inclusion and pointwise order on timestamps coincide
    if len(t) == 0:
        return
    picks = st.sets(st.integers(1, len(t)), max_size=3)
    s1 = tl_closure(t, data.draw(picks))
    s2 = tl_closure(t, data.draw(picks))
    assert (s1 <= s2) == leq(_timestamp(t, s1), _timestamp(t, s2))
    assert _timestamp(t, tl_closure(t, s1 | s2)) == join(_timestamp(t, s1), _timestamp(t, s2))
