import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from nvbackup.schedule import FailureSchedule, fixed_schedule, random_schedule  # noqa: E402
from nvbackup.trace import SyntheticProfile, Trace, gen_synthetic_trace, make_rng  # noqa: E402


def corpus_trace(k, max_events=2000):
    """Deterministic mixed-locality trace number ``k`` of the property corpus."""
    rng = make_rng(10_000 + k)
    profile = SyntheticProfile(
        n_events=int(rng.integers(0, max_events + 1)),
        addr_range_words=int(rng.choice([8, 32, 200, 1000, 5000])),
        store_fraction=float(rng.choice([0.0, 0.1, 0.3, 0.5, 0.9, 1.0])),
        locality=str(rng.choice(["sequential", "uniform", "looped"])),
        base_addr=int(rng.integers(0, 1 << 20)) * 4,
        loop_window_words=int(rng.integers(1, 128)),
        loop_phase_events=int(rng.integers(1, 500)),
    )
    return gen_synthetic_trace(profile, seed=k)


def corpus_schedules(trace, k, count=5):
    """A mix of fixed and random schedules covering ``trace``."""
    last = trace.last_cycle
    out = []
    for j in range(count):
        if j % 2 == 0:
            n = max(1, (last + 1) // (1 + 3 * j) if last else 1)
            out.append(fixed_schedule(last, n))
        else:
            p = min(0.5, (2 + 4 * j) / max(last, 1))
            out.append(random_schedule(last, p, seed=k * 31 + j))
    return out


@pytest.fixture(scope="session")
def corpus():
    """200 traces x 5 schedules."""
    return [(t, corpus_schedules(t, k)) for k, t in enumerate(corpus_trace(k) for k in range(200))]


@st.composite
def traces(draw, max_events=60, max_words=12):
    n = draw(st.integers(0, max_events))
    strides = draw(st.lists(st.integers(0, 5), min_size=n, max_size=n))
    words = draw(st.lists(st.integers(0, max_words - 1), min_size=n, max_size=n))
    stores = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    base = draw(st.integers(0, 1 << 16)) * 4
    cycles = np.cumsum(strides) if n else np.zeros(0, dtype=np.int64)
    return Trace(cycles, [base + 4 * w for w in words], stores)


@st.composite
def trace_and_schedule(draw, **kw):
    t = draw(traces(**kw))
    last = t.last_cycle
    cuts = draw(st.sets(st.integers(0, max(last - 1, 0)), max_size=10)) if last else set()
    bounds = sorted(c for c in cuts if c < last) + [last + draw(st.integers(0, 3))]
    return t, FailureSchedule(tuple(bounds))


# -- acceptance report -------------------------------------------------------

_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        word = {"PASSED": "PASS", "FAILED": "FAIL", "SKIPPED": "SKIPPED"}.get(outcome, outcome)
        terminalreporter.write_line(f"{word:8s} {name}")
