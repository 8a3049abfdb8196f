"""Prior distributions on hazard increments, the time partition and J.

The cumulative baseline hazard has a gamma-process prior with mean
``H*(t) = eta0 * t**kappa0`` and confidence weight ``c0``.  Given the
partition, increments are independent gamma variables.  The number of
interior splits follows a Poisson distribution truncated to
``{0, ..., J_max}``; the splits themselves are the even-numbered order
statistics of ``2J + 1`` uniforms on ``(0, s_max)``.  Regression
coefficients carry a flat prior and contribute nothing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ConfigError
from .likelihood import TimePartition


@dataclass(frozen=True)
class Hyperparameters:
    eta0: float = 0.2
    kappa0: float = 0.5
    c0: float = 1.0
    alpha: float = 10.0
    rho: float = 0.2
    C_cap: float = 0.8
    J_max: int = 50
    s_max: float | None = None  # None: use the largest observed time

    def __post_init__(self):
        for name in ("eta0", "kappa0", "c0", "alpha", "rho", "C_cap"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {v!r}")
        if not self.C_cap < 1:
            raise ConfigError(f"C_cap must be below 1, got {self.C_cap!r}")
        if 2 * self.rho > self.C_cap:
            raise ConfigError(
                f"rho={self.rho!r} too large: need 2*rho <= C_cap={self.C_cap!r}")
        if int(self.J_max) != self.J_max or self.J_max < 1:
            raise ConfigError(f"J_max must be a positive integer, got {self.J_max!r}")
        object.__setattr__(self, "J_max", int(self.J_max))
        if self.s_max is not None and not self.s_max > 0:
            raise ConfigError(f"s_max must be positive, got {self.s_max!r}")

    def with_s_max(self, s_max: float) -> "Hyperparameters":
        return replace(self, s_max=float(s_max))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def increment_shape(s_lo, s_hi, hp: Hyperparameters):
    """Gamma shape ``c0 * (H*(s_hi) - H*(s_lo))`` for the increment on ``(s_lo, s_hi]``."""
    return hp.c0 * hp.eta0 * (np.power(s_hi, hp.kappa0) - np.power(s_lo, hp.kappa0))


def _gamma_logpdf(h, shape, rate):
    return shape * math.log(rate) - math.lgamma(shape) + (shape - 1.0) * math.log(h) - rate * h


def log_prior_increment(h_j: float, s_lo: float, s_hi: float, hp: Hyperparameters) -> float:
    shape = float(increment_shape(s_lo, s_hi, hp))
    if not shape > 0:
        raise ValueError(f"non-positive gamma shape {shape!r} on ({s_lo!r}, {s_hi!r}]")
    if not h_j > 0:
        raise ValueError(f"increment must be positive, got {h_j!r}")
    return _gamma_logpdf(h_j, shape, hp.c0)


def log_prior_increments(h: np.ndarray, part: TimePartition, hp: Hyperparameters) -> float:
    """Sum of the independent gamma log-densities over all intervals."""
    shape = increment_shape(part.s[:-1], part.s[1:], hp)
    rate = hp.c0
    return float(np.sum(shape * np.log(rate) - gammaln(shape)
                        + (shape - 1.0) * np.log(h) - rate * h))


def log_prior_partition(part: TimePartition, hp: Hyperparameters | None = None) -> float:
    """Log density of the even-numbered order statistics of ``2J+1`` uniforms."""
    J = part.J
    return (math.lgamma(2 * J + 2) - (2 * J + 1) * math.log(part.s_max)
            + float(np.sum(np.log(part.widths))))


def log_prior_J(J: int, hp: Hyperparameters) -> float:
    if not 0 <= J <= hp.J_max:
        raise ValueError(f"J={J} outside 0..J_max={hp.J_max}")
    return float(_log_poisson(J, hp.alpha) - _log_poisson_norm(hp.alpha, hp.J_max))


def _log_poisson(k, alpha):
    k = np.asarray(k, dtype=float)
    return k * math.log(alpha) - alpha - gammaln(k + 1)


def _log_poisson_norm(alpha, J_max):
    return logsumexp(_log_poisson(np.arange(J_max + 1), alpha))


def truncated_poisson_pmf(alpha: float, J_max: int) -> np.ndarray:
    lp = _log_poisson(np.arange(J_max + 1), alpha)
    return np.exp(lp - logsumexp(lp))


def sample_partition(J: int, hp: Hyperparameters, rng: np.random.Generator) -> TimePartition:
    if hp.s_max is None:
        raise ConfigError("sample_partition needs hp.s_max")
    if not 0 <= J <= hp.J_max:
        raise ValueError(f"J={J} outside 0..J_max={hp.J_max}")
    u = np.sort(rng.uniform(0.0, hp.s_max, size=2 * J + 1))
    return TimePartition.from_splits(u[1:2 * J:2], hp.s_max)


def log_lattice_mass(candidates: np.ndarray, s_max: float, J_max: int) -> np.ndarray:
    """``log Z_J`` for ``J = 0..J_max``.

    ``Z_J`` is the partition-prior density summed over every ``J``-subset of
    ``candidates``.  Dividing the density by ``Z_J`` turns it into a proper
    distribution over split sets drawn from the candidate lattice, which is
    what a sampler that only proposes candidate positions actually targets.
    Entries are ``-inf`` for ``J`` larger than the number of candidates.

    The sum over increasing index tuples is a dynamic program:
    ``f_1(i) = u_i`` and ``f_k(i) = sum_{i' < i} f_{k-1}(i') (u_i - u_{i'})``
    with ``u = candidates / s_max``; then ``G_J = sum_i f_J(i) (1 - u_i)``.
    """
    u = np.asarray(candidates, dtype=float) / s_max
    N = len(u)
    out = np.full(J_max + 1, -np.inf)
    out[0] = 0.0
    if N == 0:
        return out
    f = u.copy()
    log_scale = 0.0
    for J in range(1, min(J_max, N) + 1):
        if J > 1:
            # exclusive prefix sums over i' < i
            A = np.concatenate(([0.0], np.cumsum(f)[:-1]))
            B = np.concatenate(([0.0], np.cumsum(f * u)[:-1]))
            f = np.maximum(u * A - B, 0.0)
            f[:J - 1] = 0.0
        top = f.max()
        if top <= 0:
            break
        f /= top
        log_scale += math.log(top)
        G = float(np.dot(f, 1.0 - u))
        out[J] = math.lgamma(2 * J + 2) - J * math.log(s_max) + log_scale + math.log(G)
    return out
