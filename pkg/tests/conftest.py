import numpy as np
import pytest

from gprj.data import Dataset
from gprj.likelihood import ModelState, TimePartition


def random_dataset(rng, n=20, p=2, ties=False, censor=0.3):
    """Small survival dataset with event times drawn on (0, 10]."""
    if ties:
        y = rng.integers(1, 8, size=n).astype(float)
    else:
        y = rng.uniform(0.05, 10.0, size=n)
    event = (rng.random(n) > censor).astype(int)
    event[0] = 1
    X = rng.normal(size=(n, p))
    return Dataset(y, event, X, tuple(f"x{m + 1}" for m in range(p)))


def random_state(rng, d, J=3, on_events=False):
    s_max = d.y_max
    if on_events:
        pool = d.candidate_splits(s_max)
        J = min(J, len(pool))
        splits = np.sort(rng.choice(pool, size=J, replace=False))
    else:
        splits = np.sort(rng.uniform(0.0, s_max, size=J))
    part = TimePartition.from_splits(splits, s_max)
    h = rng.gamma(2.0, 0.5, size=part.J + 1)
    beta = rng.normal(scale=0.5, size=d.p)
    return ModelState(beta, part, h)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
