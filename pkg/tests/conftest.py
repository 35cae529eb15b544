from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from syncp.generators import GenConfig, gen_random
from syncp.trace_io import parse_trace, read_trace

TRACES = Path(__file__).resolve().parents[1] / "traces"

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def fixture(name):
    return read_trace(TRACES / f"{name}.trace")


def tr(text):
    """Trace from ';'-separated 'thread op target' triples, e.g. 't1 w x; t2 r x'."""
    lines = ["|".join(part.split()) for part in text.split(";") if part.strip()]
    return parse_trace("\n".join(lines))


def pairs(reports):
    return sorted((r.e1, r.e2) for r in reports)


@st.composite
def small_traces(draw, max_events=12, max_threads=3, max_locks=2, max_vars=2, fork_join=False):
    """Random valid traces drawn through the seeded generator."""
    n_locks = draw(st.integers(0, max_locks))
    sync = draw(st.sampled_from((0.0, 0.2, 0.4))) if n_locks else 0.0
    p_read = draw(st.sampled_from((0.3, 0.5)))
    cfg = GenConfig(
        n_events=draw(st.integers(0, max_events)),
        n_threads=draw(st.integers(1, max_threads)),
        n_locks=n_locks,
        n_vars=draw(st.integers(1, max_vars)),
        p_read=p_read * (1 - sync),
        p_write=(1 - p_read) * (1 - sync),
        p_acquire=sync / 2,
        p_release=sync / 2,
        seed=draw(st.integers(0, 2**31 - 1)),
        fork_join=fork_join and draw(st.booleans()),
    )
    return gen_random(cfg)


def seeded_traces(count, n_events=12, n_threads=3, n_locks=2, n_vars=2, start=0):
    """Deterministic sweep of generator outputs, cycling through a few event mixes."""
    mixes = ((0.3, 0.3, 0.2, 0.2), (0.4, 0.3, 0.15, 0.15), (0.2, 0.4, 0.2, 0.2), (0.5, 0.5, 0, 0))
    for s in range(start, start + count):
        pr, pw, pa, pl = mixes[s % len(mixes)]
        yield s, gen_random(GenConfig(n_events=n_events, n_threads=n_threads, n_locks=n_locks,
                                      n_vars=n_vars, p_read=pr, p_write=pw, p_acquire=pa,
                                      p_release=pl, seed=s))


@pytest.fixture
def load():
    return fixture


# one verdict line per acceptance criterion, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
