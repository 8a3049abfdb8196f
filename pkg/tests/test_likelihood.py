import math

import numpy as np
import pytest

from gprj.data import Dataset, Subject
from gprj.errors import NumericError
from gprj.likelihood import (ModelState, TimePartition, cumulative_hazard, interval_exposure,
                             interval_index, interval_statistics, log_likelihood,
                             log_likelihood_subject, log_likelihood_subjects)

from conftest import random_dataset, random_state
from oracles import quad_log_likelihood


class TestIntervals:
    part = TimePartition(np.array([0.0, 10.0, 20.0, 30.0]))

    def test_index_inside(self):
        assert interval_index(13, self.part) == 2

    def test_index_right_closed(self):
        assert interval_index(10, self.part) == 1
        assert interval_index(30, self.part) == 3

    @pytest.mark.parametrize("y", [35.0, 0.0, -1.0])
    def test_index_out_of_range(self, y):
        with pytest.raises(ValueError):
            interval_index(y, self.part)

    @pytest.mark.parametrize("y,expect", [(5, 0.0), (25, 10.0), (13, 3.0)])
    def test_exposure(self, y, expect):
        assert interval_exposure(y, 2, self.part) == expect

    def test_partition_validation(self):
        with pytest.raises(ValueError):
            TimePartition(np.array([0.0, 2.0, 1.0]))
        with pytest.raises(ValueError):
            TimePartition(np.array([1.0, 2.0]))

    def test_state_validation(self):
        part = TimePartition(np.array([0.0, 1.0, 2.0]))
        with pytest.raises(ValueError):
            ModelState(np.zeros(1), part, np.array([1.0]))
        with pytest.raises(ValueError):
            ModelState(np.zeros(1), part, np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            ModelState(np.array([np.inf]), part, np.array([1.0, 1.0]))


class TestLogLikelihood:
    def single(self, delta, x=(0.0,), beta=(0.0,)):
        d = Dataset([1.0], [delta], [list(x)])
        st = ModelState(np.array(beta), TimePartition(np.array([0.0, 2.0])), np.array([4.0]))
        return d, st

    def test_single_event(self):
        d, st = self.single(1)
        assert log_likelihood(d, st) == pytest.approx(math.log(2) - 2, abs=1e-15)

    def test_proportional_scaling(self):
        d, st = self.single(1, x=(1.0,), beta=(math.log(2),))
        assert log_likelihood(d, st) == pytest.approx(math.log(4) - 4, abs=1e-14)

    def test_single_censored(self):
        d, st = self.single(0)
        assert log_likelihood(d, st) == pytest.approx(-2.0, abs=1e-15)
        assert log_likelihood_subject(Subject(1.0, 0, (0.0,)), st) == pytest.approx(-2.0)

    def test_matches_quadrature_oracle(self, rng):
        for _ in range(25):
            d = random_dataset(rng, n=20, p=2, ties=bool(rng.integers(2)))
            st = random_state(rng, d, J=int(rng.integers(0, 6)))
            assert log_likelihood(d, st) == pytest.approx(quad_log_likelihood(d, st), abs=1e-10)

    def test_subject_sum_additivity(self, rng):
        for _ in range(10):
            d = random_dataset(rng, n=15, p=3)
            st = random_state(rng, d, J=4)
            per = [log_likelihood_subject(s, st) for s in d.subjects]
            assert math.fsum(per) == pytest.approx(log_likelihood(d, st), abs=1e-12)
            np.testing.assert_allclose(log_likelihood_subjects(d, st), per, atol=1e-13)

    def test_grouped_form(self, rng):
        d = random_dataset(rng, n=30, p=2)
        st = random_state(rng, d, J=4)
        counts, exposure = interval_statistics(d, st)
        grouped = (np.sum(counts * np.log(st.rates)) - np.sum(st.rates * exposure)
                   + np.sum((d.X @ st.beta)[d.event == 1]))
        assert grouped == pytest.approx(log_likelihood(d, st), abs=1e-10)
        assert counts.sum() == d.n_events

    def test_refinement_invariance(self, rng):
        for _ in range(50):
            d = random_dataset(rng, n=20)
            st = random_state(rng, d, J=3)
            s = st.partition.s
            j = int(rng.integers(1, len(s)))
            s_star = rng.uniform(s[j - 1], s[j])
            w = s[j] - s[j - 1]
            h = np.concatenate((st.h[:j - 1], [st.h[j - 1] * (s_star - s[j - 1]) / w,
                                               st.h[j - 1] * (s[j] - s_star) / w], st.h[j:]))
            fine = ModelState(st.beta, TimePartition(np.insert(s, j, s_star)), h)
            assert log_likelihood(d, fine) == pytest.approx(log_likelihood(d, st), abs=1e-10)

    def test_shared_covariates_shift(self, rng):
        n = 12
        x = rng.normal(size=2)
        d = Dataset(rng.uniform(0.1, 5, n), np.ones(n, dtype=int), np.tile(x, (n, 1)))
        st = random_state(rng, d, J=2)
        c = 0.7
        shifted = ModelState(st.beta + np.array([c, 0.0]), st.partition,
                             st.h * math.exp(-c * x[0]))
        assert log_likelihood(d, shifted) == pytest.approx(log_likelihood(d, st), abs=1e-10)

    def test_more_hazard_lowers_survival_term(self, rng):
        d = random_dataset(rng, n=10, censor=1.0)
        d = Dataset(d.time, np.zeros(d.n, dtype=int), d.X)
        st = random_state(rng, d, J=2)
        bigger = ModelState(st.beta, st.partition, st.h * np.array([1.0, 1.5, 1.0]))
        exposed = d.time > st.partition.s[1]
        a, b = log_likelihood_subjects(d, st), log_likelihood_subjects(d, bigger)
        assert np.all(b[exposed] < a[exposed])
        np.testing.assert_array_equal(b[~exposed], a[~exposed])

    def test_overflow_raises(self):
        d = Dataset([1.0], [1], [[1000.0]])
        st = ModelState(np.array([1.0]), TimePartition(np.array([0.0, 2.0])), np.array([1.0]))
        with pytest.raises(NumericError):
            log_likelihood(d, st)

    def test_cumulative_hazard(self):
        part = TimePartition(np.array([0.0, 1.0, 3.0]))
        np.testing.assert_allclose(cumulative_hazard([0.0, 0.5, 1.0, 2.0, 3.0], part,
                                                     np.array([1.0, 4.0])),
                                   [0.0, 0.5, 1.0, 3.0, 5.0])
