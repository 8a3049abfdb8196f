"""Model comparison from retained draws: DIC, CPO/LPML and pseudo-Bayes factors.

All Monte Carlo averages are formed in the log domain with a max shift, and
every sum goes through :func:`math.fsum`.  Because ``fsum`` is correctly
rounded, the statistics do not depend on the order of the draws and are
unchanged, bit for bit, when the whole draw set is duplicated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import ValidationError
from .likelihood import subject_terms
from .rjmcmc import as_states


@dataclass(frozen=True)
class FitSummary:
    dic: float
    lpml: float
    cpo: np.ndarray
    n_samples_used: int

    def as_dict(self) -> dict:
        return {"dic": self.dic, "lpml": self.lpml, "n_samples_used": self.n_samples_used,
                "cpo": [float(v) for v in self.cpo]}


def pointwise_log_likelihood(chains, d: Dataset) -> np.ndarray:
    """``(R, n)`` matrix of per-subject log-likelihoods, one row per draw.

    Accepts a :class:`SampleChain`, a list of chains (pooled) or a list of
    :class:`ModelState`.
    """
    states = as_states(chains)
    if not states:
        raise ValidationError("no retained samples")
    out = np.empty((len(states), d.n))
    for r, st in enumerate(states):
        out[r] = subject_terms(d, st)
    out[np.isnan(out)] = -np.inf
    return out


def _log_mean_exp(col: np.ndarray) -> float:
    m = float(np.max(col))
    if not math.isfinite(m):
        return m
    return m + math.log(math.fsum(np.exp(col - m).tolist()) / len(col))


def dic_from_matrix(ll: np.ndarray) -> float:
    R = ll.shape[0]
    if R < 1:
        raise ValidationError("no retained samples")
    mean_dev = -4.0 * math.fsum(ll.ravel().tolist()) / R
    fit = math.fsum(_log_mean_exp(ll[:, i]) for i in range(ll.shape[1]))
    return mean_dev + 2.0 * fit


def lpml_from_matrix(ll: np.ndarray) -> tuple[float, np.ndarray]:
    if ll.shape[0] < 1:
        raise ValidationError("no retained samples")
    log_cpo = np.empty(ll.shape[1])
    for i in range(ll.shape[1]):
        col = ll[:, i]
        if not np.any(np.isfinite(col)):
            raise ValidationError(f"subject {i + 1}: log-likelihood is -inf in every sample")
        # CPO_i is the harmonic mean of the likelihoods
        log_cpo[i] = -_log_mean_exp(-col)
    return math.fsum(log_cpo.tolist()), np.exp(log_cpo)


def dic(chains, d: Dataset) -> float:
    """Monte Carlo DIC: ``-4 mean_r log L(D|draw_r) + 2 sum_i log mean_r L(D_i|draw_r)``."""
    return dic_from_matrix(pointwise_log_likelihood(chains, d))


def lpml(chains, d: Dataset) -> tuple[float, np.ndarray]:
    """Log pseudo-marginal likelihood and the per-subject CPO estimates."""
    return lpml_from_matrix(pointwise_log_likelihood(chains, d))


def fit_summary(chains, d: Dataset) -> FitSummary:
    ll = pointwise_log_likelihood(chains, d)
    total, cpo = lpml_from_matrix(ll)
    return FitSummary(dic=dic_from_matrix(ll), lpml=total, cpo=cpo, n_samples_used=ll.shape[0])


def pseudo_bayes_factor(lpml_a: float, lpml_b: float) -> float:
    return math.exp(lpml_a - lpml_b)


def dic_support(delta: float) -> str:
    """Rule-of-thumb label for a DIC difference."""
    delta = abs(delta)
    if delta < 2:
        return "negligible"
    if delta <= 6:
        return "positive"
    return "strong"


def compare_models(summaries: dict[str, FitSummary]) -> tuple[list[dict], list[list[float]]]:
    """Rows with DIC/LPML and the difference to the best DIC, plus a PBF matrix.

    ``pbf[a][b] = exp(LPML_a - LPML_b)``.
    """
    names = list(summaries)
    best = min(s.dic for s in summaries.values())
    rows = []
    for name in names:
        s = summaries[name]
        rows.append({"model": name, "dic": s.dic, "lpml": s.lpml,
                     "delta_dic": s.dic - best, "support": dic_support(s.dic - best)})
    pbf = [[pseudo_bayes_factor(summaries[a].lpml, summaries[b].lpml) for b in names]
           for a in names]
    return rows, pbf

