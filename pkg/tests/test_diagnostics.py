import math

import numpy as np
import pytest

from gprj.diagnostics import PSRF_THRESHOLD, passes_gate, psrf, psrf_report
from gprj.errors import ValidationError
from gprj.likelihood import ModelState, TimePartition
from gprj.rjmcmc import SampleChain


def make_chain(beta, log_lik, J=None, chain_id=0):
    beta = np.asarray(beta, dtype=float).reshape(len(log_lik), -1)
    J = np.zeros(len(log_lik), dtype=int) if J is None else J
    samples = []
    for b, j in zip(beta, J):
        part = TimePartition(np.linspace(0.0, 10.0, j + 2))
        samples.append(ModelState(b, part, np.ones(j + 1)))
    return SampleChain(samples, np.arange(len(samples)), np.asarray(log_lik, dtype=float),
                       {}, 0, chain_id, 10.0)


class TestPsrf:
    def test_identical_chains(self):
        assert psrf([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(math.sqrt(0.75), abs=1e-12)

    def test_direct_formula(self, rng):
        a, b = rng.normal(size=50), rng.normal(0.3, 1.2, size=50)
        n = 50
        W = (a.var(ddof=1) + b.var(ddof=1)) / 2
        means = np.array([a.mean(), b.mean()])
        B = n * means.var(ddof=1)
        V = (n - 1) / n * W + B / n
        assert psrf(a, b) == pytest.approx(math.sqrt(V / W), rel=1e-12)

    def test_constant_chains_undefined(self):
        with pytest.raises(ValidationError):
            psrf([0, 0, 0, 0], [1, 1, 1, 1])

    def test_same_distribution_passes(self, rng):
        assert psrf(rng.normal(size=10_000), rng.normal(size=10_000)) < PSRF_THRESHOLD

    def test_three_chains(self, rng):
        x = [rng.normal(size=1000) for _ in range(3)]
        assert 0.99 < psrf(*x) < 1.01

    def test_too_short(self):
        with pytest.raises(ValidationError):
            psrf([1.0], [2.0])


class TestReport:
    def test_converged_clear(self, rng):
        chains = [make_chain(rng.normal(size=(2000, 2)), rng.normal(size=2000), chain_id=k)
                  for k in range(2)]
        rows = psrf_report(chains, ["a", "b"])
        assert [r.parameter for r in rows] == ["a", "b", "log_lik", "J"]
        assert passes_gate(rows)
        assert rows[-1].note == "constant"

    def test_stuck_chain_flagged(self, rng):
        good = make_chain(rng.normal(size=(500, 1)), rng.normal(size=500))
        stuck = make_chain(np.full((500, 1), 3.0) + 1e-3 * rng.normal(size=(500, 1)),
                           rng.normal(size=500), chain_id=1)
        rows = psrf_report([good, stuck])
        assert not passes_gate(rows)
        assert next(r for r in rows if r.parameter == "beta1").flagged

    def test_single_chain(self, rng):
        with pytest.raises(ValidationError, match="two chains"):
            psrf_report([make_chain(rng.normal(size=(10, 1)), rng.normal(size=10))])

    def test_constant_disagreeing_chains_flagged(self, rng):
        a = make_chain(rng.normal(size=(20, 1)), rng.normal(size=20), J=np.full(20, 2))
        b = make_chain(rng.normal(size=(20, 1)), rng.normal(size=20), J=np.full(20, 3))
        row = next(r for r in psrf_report([a, b]) if r.parameter == "J")
        assert row.flagged and row.psrf == math.inf
