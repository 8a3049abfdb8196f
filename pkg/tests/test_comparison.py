import math

import mpmath
import numpy as np
import pytest

from gprj.comparison import (compare_models, dic, dic_from_matrix, dic_support, fit_summary,
                             lpml, lpml_from_matrix, pointwise_log_likelihood,
                             pseudo_bayes_factor)
from gprj.errors import ValidationError
from gprj.likelihood import log_likelihood, log_likelihood_subjects

from conftest import random_dataset, random_state


def mp_dic(ll):
    mpmath.mp.dps = 50
    R, n = ll.shape
    first = -4 * mpmath.fsum(mpmath.mpf(v) for v in ll.ravel()) / R
    second = 2 * mpmath.fsum(mpmath.log(mpmath.fsum(mpmath.exp(mpmath.mpf(v)) for v in ll[:, i]) / R)
                             for i in range(n))
    return first + second


def mp_lpml(ll):
    mpmath.mp.dps = 50
    R, n = ll.shape
    return mpmath.fsum(-mpmath.log(mpmath.fsum(mpmath.exp(-mpmath.mpf(v)) for v in ll[:, i]) / R)
                       for i in range(n))


class TestPointwise:
    def test_rows_match_likelihood(self, rng):
        d = random_dataset(rng, n=12)
        states = [random_state(rng, d, J=int(rng.integers(0, 4))) for _ in range(6)]
        ll = pointwise_log_likelihood(states, d)
        for r, st in enumerate(states):
            np.testing.assert_allclose(ll[r], log_likelihood_subjects(d, st), atol=1e-12)


class TestDicLpml:
    def test_single_draw(self, rng):
        d = random_dataset(rng, n=10)
        st = random_state(rng, d)
        row = log_likelihood_subjects(d, st)
        total = log_likelihood(d, st)
        assert dic([st], d) == -2 * total
        lp, cpo = lpml([st], d)
        assert lp == total
        np.testing.assert_allclose(cpo, np.exp(row), rtol=1e-15)

    def test_repeated_draw(self, rng):
        d = random_dataset(rng, n=10)
        st = random_state(rng, d)
        assert dic([st] * 10, d) == dic([st], d)
        assert lpml([st] * 10, d)[0] == lpml([st], d)[0]

    def test_extended_precision_oracle(self, rng):
        for _ in range(5):
            d = random_dataset(rng, n=3)
            states = [random_state(rng, d) for _ in range(2)]
            ll = pointwise_log_likelihood(states, d)
            assert dic(states, d) == pytest.approx(float(mp_dic(ll)), abs=1e-11)
            assert lpml(states, d)[0] == pytest.approx(float(mp_lpml(ll)), abs=1e-11)

    def test_oracle_on_extreme_values(self, rng):
        ll = rng.uniform(-700, 0, size=(500, 8))
        assert dic_from_matrix(ll) == pytest.approx(float(mp_dic(ll)), rel=1e-13)
        assert lpml_from_matrix(ll)[0] == pytest.approx(float(mp_lpml(ll)), rel=1e-13)

    def test_cpo_below_max_likelihood(self, rng):
        ll = rng.normal(-3, 2, size=(50, 20))
        _, cpo = lpml_from_matrix(ll)
        assert np.all(cpo <= np.exp(ll.max(axis=0)) * (1 + 1e-12))
        assert math.fsum(np.log(cpo)) == pytest.approx(lpml_from_matrix(ll)[0], abs=1e-12)

    def test_permutation_and_duplication_bitwise(self, rng):
        ll = rng.normal(-2, 3, size=(300, 25))
        base = (dic_from_matrix(ll), lpml_from_matrix(ll)[0])
        for _ in range(5):
            perm = ll[rng.permutation(len(ll))]
            assert (dic_from_matrix(perm), lpml_from_matrix(perm)[0]) == base
        dup = np.vstack([ll, ll])
        assert (dic_from_matrix(dup), lpml_from_matrix(dup)[0]) == base

    def test_uniformly_better_model(self, rng):
        ll = rng.normal(-2, 1, size=(40, 10))
        better = ll + rng.uniform(0.1, 1.0, size=10)
        assert dic_from_matrix(better) < dic_from_matrix(ll)
        assert lpml_from_matrix(better)[0] > lpml_from_matrix(ll)[0]

    def test_subject_never_supported(self):
        ll = np.zeros((3, 4))
        ll[:, 2] = -np.inf
        with pytest.raises(ValidationError, match="subject 3"):
            lpml_from_matrix(ll)

    def test_empty(self):
        with pytest.raises(ValidationError):
            dic_from_matrix(np.zeros((0, 3)))
        with pytest.raises(ValidationError):
            pointwise_log_likelihood([], random_dataset(np.random.default_rng(0)))

    def test_fit_summary(self, rng):
        d = random_dataset(rng, n=8)
        states = [random_state(rng, d) for _ in range(5)]
        fs = fit_summary(states, d)
        assert fs.n_samples_used == 5
        assert fs.dic == dic(states, d)
        assert fs.lpml == pytest.approx(np.log(fs.cpo).sum(), abs=1e-12)


class TestPseudoBayes:
    def test_reference(self):
        assert pseudo_bayes_factor(-19.6, -19.9) == pytest.approx(1.35, abs=0.005)

    def test_identity_and_antisymmetry(self):
        assert pseudo_bayes_factor(-5.0, -5.0) == 1.0
        assert pseudo_bayes_factor(-3.0, -7.5) * pseudo_bayes_factor(-7.5, -3.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("delta,label", [(0, "negligible"), (1.99, "negligible"),
                                             (2, "positive"), (6, "positive"), (6.1, "strong"),
                                             (-8, "strong")])
    def test_dic_support(self, delta, label):
        assert dic_support(delta) == label

    def test_compare_identical(self, rng):
        d = random_dataset(rng, n=8)
        fs = fit_summary([random_state(rng, d) for _ in range(3)], d)
        rows, pbf = compare_models({"a": fs, "b": fs})
        assert [r["delta_dic"] for r in rows] == [0.0, 0.0]
        assert {r["support"] for r in rows} == {"negligible"}
        assert pbf == [[1.0, 1.0], [1.0, 1.0]]
