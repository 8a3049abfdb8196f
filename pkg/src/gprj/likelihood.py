"""Piecewise-exponential proportional-hazards likelihood.

Intervals are left-open and right-closed, ``(s[j-1], s[j]]``, and are
numbered from 1 in the public helpers.  ``h[j-1]`` is the increment of the
cumulative baseline hazard over interval ``j``, so the baseline hazard on
that interval is ``h[j-1] / (s[j] - s[j-1])``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, Subject
from .errors import NumericError, ValidationError


@dataclass(frozen=True, eq=False)
class TimePartition:
    """Knots ``0 = s_0 < s_1 < ... < s_J < s_{J+1} = s_max``."""

    s: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=float).reshape(-1)
        if len(s) < 2 or s[0] != 0.0:
            raise ValidationError("partition must start at 0 and have a terminal knot")
        if not np.all(np.diff(s) > 0):
            raise ValidationError("partition knots must be strictly increasing")
        s.setflags(write=False)
        object.__setattr__(self, "s", s)

    @classmethod
    def from_splits(cls, splits, s_max: float) -> "TimePartition":
        return cls(np.concatenate(([0.0], np.asarray(splits, dtype=float), [s_max])))

    @property
    def J(self) -> int:
        return len(self.s) - 2

    @property
    def s_max(self) -> float:
        return float(self.s[-1])

    @property
    def splits(self) -> np.ndarray:
        return self.s[1:-1]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.s)

    def __eq__(self, other):
        if not isinstance(other, TimePartition):
            return NotImplemented
        return np.array_equal(self.s, other.s)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ModelState:
    """Regression coefficients, time partition and hazard increments."""

    beta: np.ndarray
    partition: TimePartition
    h: np.ndarray

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float).reshape(-1)
        h = np.array(self.h, dtype=float).reshape(-1)
        if len(h) != self.partition.J + 1:
            raise ValidationError(
                f"{len(h)} increments for a partition with {self.partition.J + 1} intervals")
        if not np.all(h > 0) or not np.all(np.isfinite(h)):
            raise ValidationError("hazard increments must be positive and finite")
        if not np.all(np.isfinite(beta)):
            raise ValidationError("regression coefficients must be finite")
        beta.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "h", h)

    @property
    def J(self) -> int:
        return self.partition.J

    @property
    def rates(self) -> np.ndarray:
        """Baseline hazard level on each interval."""
        return self.h / self.partition.widths

    def __eq__(self, other):
        if not isinstance(other, ModelState):
            return NotImplemented
        return (np.array_equal(self.beta, other.beta)
                and self.partition == other.partition
                and np.array_equal(self.h, other.h))

    __hash__ = None


def interval_index(y: float, part: TimePartition) -> int:
    """1-based index ``j`` with ``s[j-1] < y <= s[j]``."""
    if y <= 0:
        raise ValueError(f"time {y!r} must be positive")
    if y > part.s_max:
        raise ValueError(f"time {y!r} exceeds s_max={part.s_max!r}")
    return int(np.searchsorted(part.s, y, side="left"))


def interval_exposure(y: float, j: int, part: TimePartition) -> float:
    lo, hi = part.s[j - 1], part.s[j]
    return max(0.0, min(y, hi) - lo)


def exposure_matrix(y: np.ndarray, part: TimePartition) -> np.ndarray:
    """``(n, J+1)`` matrix of time each subject spends in each interval."""
    lo = part.s[:-1]
    return np.clip(np.asarray(y, dtype=float)[:, None] - lo, 0.0, part.widths)


def cumulative_hazard(t, part: TimePartition, h: np.ndarray) -> np.ndarray:
    """Baseline cumulative hazard at ``t`` (piecewise linear in ``t``)."""
    knots = np.concatenate(([0.0], np.cumsum(h)))
    return np.interp(t, part.s, knots)


def _check_consistent(d: Dataset, state: ModelState) -> None:
    if len(state.beta) != d.p:
        raise ValidationError(f"beta has length {len(state.beta)}, dataset has p={d.p}")
    if d.n and state.partition.s_max < d.y_max:
        raise ValidationError(
            f"s_max={state.partition.s_max!r} is below the largest time {d.y_max!r}")


def subject_terms(d: Dataset, state: ModelState) -> np.ndarray:
    """Per-subject log-likelihood terms; may contain non-finite values."""
    _check_consistent(d, state)
    part = state.partition
    eta = d.X @ state.beta
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        risk = np.exp(eta)
        H = exposure_matrix(d.time, part) @ state.rates
        out = -H * risk
        ev = d.event == 1
        if ev.any():
            j = np.searchsorted(part.s, d.time[ev], side="left")
            out[ev] += np.log(state.rates[j - 1]) + eta[ev]
    return out


def log_likelihood_subjects(d: Dataset, state: ModelState) -> np.ndarray:
    """Per-subject log-likelihood contributions (full recompute)."""
    out = subject_terms(d, state)
    if not np.all(np.isfinite(out)):
        raise NumericError("non-finite log-likelihood (overflow in exp(x'beta)?)")
    return out


def log_likelihood(d: Dataset, state: ModelState) -> float:
    """Observed-data log-likelihood, summed over subjects."""
    return math.fsum(log_likelihood_subjects(d, state).tolist())


def log_likelihood_subject(subj: Subject, state: ModelState) -> float:
    part = state.partition
    if len(subj.x) != len(state.beta):
        raise ValidationError("covariate length does not match beta")
    if subj.y > part.s_max:
        raise ValidationError(f"time {subj.y!r} exceeds s_max")
    eta = float(np.dot(subj.x, state.beta))
    rates = state.rates
    with np.errstate(over="ignore", invalid="ignore"):
        H = float(np.dot(exposure_matrix(np.array([subj.y]), part)[0], rates))
        out = -H * np.exp(eta)
        if subj.delta:
            out += np.log(rates[interval_index(subj.y, part) - 1]) + eta
    if not np.isfinite(out):
        raise NumericError("non-finite log-likelihood (overflow in exp(x'beta)?)")
    return float(out)


def interval_statistics(d: Dataset, state: ModelState) -> tuple[np.ndarray, np.ndarray]:
    """Event counts ``d_j`` and risk-weighted exposures per interval.

    The exposure term is ``sum_l Delta_j(y_l) exp(x_l'beta)``; the
    log-likelihood equals
    ``sum_j d_j log(rate_j) - rate_j * exposure_j + sum_i delta_i x_i'beta``.
    """
    part = state.partition
    ev = d.event == 1
    j = np.searchsorted(part.s, d.time[ev], side="left")
    counts = np.bincount(j - 1, minlength=part.J + 1)
    exposure = np.exp(d.X @ state.beta) @ exposure_matrix(d.time, part)
    return counts, exposure
