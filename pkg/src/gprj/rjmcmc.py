"""Random-scan Metropolis-Hastings-Green sampler over (beta, J, s, h).

Each iteration picks one of four moves with probabilities that depend on
the current number of splits ``J``:

* ``RP`` random-walk update of each regression coefficient,
* ``BH`` random-walk update of every hazard increment on the log scale,
* ``BI`` birth of a split at an observed event time,
* ``DI`` death of an existing split.

Births and deaths are paired through :func:`split_transform` and
:func:`merge_transform`.  :class:`ChainKernel` keeps per-chain caches
(linear predictors, suffix sums of the risk scores, cumulative hazards at
the observed times) so that a birth or death costs ``O(log n)`` and a
coefficient update ``O(n)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Sequence

import numpy as np

from .data import Dataset, validate_dataset
from .errors import ConfigError, NumericError, ValidationError
from .likelihood import ModelState, TimePartition
from .priors import Hyperparameters, increment_shape, log_lattice_mass

MOVES = ("RP", "BH", "BI", "DI")


@dataclass(frozen=True)
class MoveProbabilities:
    rp: float
    bh: float
    bi: float
    di: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.rp, self.bh, self.bi, self.di)


def move_probabilities(J: int, hp: Hyperparameters,
                       fixed_partition: bool = False) -> MoveProbabilities:
    if not 0 <= J <= hp.J_max and not fixed_partition:
        raise ValueError(f"J={J} outside 0..J_max={hp.J_max}")
    if fixed_partition:
        bi = di = 0.0
    else:
        bi = 0.0 if J >= hp.J_max else hp.rho * min(1.0, hp.alpha / (J + 1))
        di = hp.rho * min(1.0, J / hp.alpha)
    rest = (1.0 - bi - di) / 2.0
    return MoveProbabilities(rest, rest, bi, di)


@dataclass(frozen=True)
class SamplerConfig:
    n_iter: int = 100_000
    n_burnin: int = 50_000
    thin: int = 10
    beta_step: float | tuple[float, ...] = 0.1
    h_step: float = 0.5
    adapt: bool = True
    seed: int = 0
    fixed_partition: bool = False
    # Replace the likelihood by a constant; the chain then samples the prior.
    flat_likelihood: bool = False
    # Normalize the partition prior over the event-time lattice (see
    # priors.log_lattice_mass).  False reproduces the unnormalized ratio.
    lattice_prior: bool = True
    target_accept: float = 0.35

    def __post_init__(self):
        if self.n_iter < 1 or self.thin < 1 or self.n_burnin < 0:
            raise ConfigError("n_iter and thin must be >= 1 and n_burnin >= 0")
        if not self.n_burnin < self.n_iter:
            raise ConfigError(f"n_burnin={self.n_burnin} must be below n_iter={self.n_iter}")
        steps = np.atleast_1d(np.asarray(self.beta_step, dtype=float))
        if not np.all(steps > 0) or not self.h_step > 0:
            raise ConfigError("proposal steps must be positive")
        if not 0 < self.target_accept < 1:
            raise ConfigError("target_accept must lie in (0, 1)")

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        if isinstance(out["beta_step"], tuple):
            out["beta_step"] = list(out["beta_step"])
        return out


@dataclass
class SampleChain:
    """Retained draws of one chain with acceptance tallies.

    ``acceptance`` maps a move name to ``(accepted, proposed)`` counted after
    burn-in; for ``RP`` and ``BH`` every coefficient or increment proposal
    counts once.
    """

    samples: list[ModelState]
    iterations: np.ndarray
    log_lik: np.ndarray
    acceptance: dict[str, tuple[int, int]]
    seed: int
    chain_id: int
    s_max: float
    step_sizes: dict = field(default_factory=dict)
    burnin_acceptance: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def beta(self) -> np.ndarray:
        return np.array([st.beta for st in self.samples]).reshape(len(self.samples), -1)

    @property
    def J(self) -> np.ndarray:
        return np.array([st.J for st in self.samples], dtype=int)

    def acceptance_rate(self, move: str) -> float:
        acc, prop = self.acceptance.get(move, (0, 0))
        return acc / prop if prop else float("nan")


# --------------------------------------------------------------------------
# split / merge
# --------------------------------------------------------------------------

def split_transform(h_j: float, s_lo: float, s_star: float, s_hi: float,
                    U: float) -> tuple[float, float]:
    """Split an increment at ``s_star`` given a perturbation ``U``.

    The result satisfies both the weighted-log-mean identity
    ``a log(h_lo/a) + b log(h_hi/b) = D log(h_j/D)`` and the perturbation
    ``(h_lo/a) / (h_hi/b) = (1-U)/U`` with ``a = s_star - s_lo``,
    ``b = s_hi - s_star`` and ``D = a + b``.
    """
    if not 0.0 < U < 1.0:
        raise ValueError(f"U must lie in (0, 1), got {U!r}")
    if not s_lo < s_star < s_hi:
        raise ValueError("need s_lo < s_star < s_hi")
    a = s_star - s_lo
    b = s_hi - s_star
    D = s_hi - s_lo
    log_r = math.log1p(-U) - math.log(U)
    h_lo = h_j * (a / D) * math.exp((b / D) * log_r)
    h_hi = h_j * (b / D) * math.exp(-(a / D) * log_r)
    return h_lo, h_hi


def merge_transform(h_lo: float, h_hi: float, s_lo: float, s_mid: float,
                    s_hi: float) -> tuple[float, float]:
    """Inverse of :func:`split_transform`: returns ``(h_merged, U)``."""
    a = s_mid - s_lo
    b = s_hi - s_mid
    D = s_hi - s_lo
    log_lo = math.log(h_lo / a)
    log_hi = math.log(h_hi / b)
    h_m = D * math.exp((a * log_lo + b * log_hi) / D)
    # (1-U)/U = exp(log_lo - log_hi)
    U = 1.0 / (1.0 + math.exp(log_lo - log_hi))
    return h_m, U


def split_log_jacobian(h_j: float, a: float, b: float, U: float) -> float:
    """``log |d(h_lo, h_hi) / d(h_j, U)|`` for :func:`split_transform`."""
    return _log_jacobian(h_j, a, b, math.log(U), math.log1p(-U))


def _log_jacobian(h_j, a, b, log_u, log_1mu):
    D = a + b
    return (math.log(h_j) + math.log(a) + math.log(b) - 2.0 * math.log(D)
            - (2.0 * a / D) * log_1mu - (2.0 * b / D) * log_u)


def merge_log_u(h_lo: float, h_hi: float, a: float, b: float) -> tuple[float, float]:
    """``(log U, log(1 - U))`` of the merge, finite even when ``U`` rounds to 0 or 1."""
    x = (math.log(h_lo) - math.log(a)) - (math.log(h_hi) - math.log(b))
    log_u = -float(np.logaddexp(0.0, x))
    return log_u, x + log_u


def _log_gamma_density(h, shape, rate):
    return shape * math.log(rate) - math.lgamma(shape) + (shape - 1.0) * math.log(h) - rate * h


# --------------------------------------------------------------------------
# initial states
# --------------------------------------------------------------------------

def equal_partition(J: int, s_max: float) -> TimePartition:
    """``J + 1`` equal-width intervals on ``(0, s_max]``."""
    return TimePartition(np.linspace(0.0, s_max, J + 2))


def event_time_partition(d: Dataset, s_max: float) -> TimePartition:
    """Splits at every distinct event time below ``s_max``."""
    return TimePartition.from_splits(d.candidate_splits(s_max), s_max)


def quantile_partition(d: Dataset, J: int, s_max: float) -> TimePartition:
    """``J`` splits at evenly spaced quantiles of the distinct event times."""
    cand = d.candidate_splits(s_max)
    J = min(J, len(cand))
    if J == 0:
        return TimePartition.from_splits([], s_max)
    idx = np.unique(np.floor(np.arange(1, J + 1) * len(cand) / (J + 1)).astype(int))
    return TimePartition.from_splits(cand[idx], s_max)


def prior_mean_increments(part: TimePartition, hp: Hyperparameters) -> np.ndarray:
    return increment_shape(part.s[:-1], part.s[1:], hp) / hp.c0


def resolve_s_max(d: Dataset, hp: Hyperparameters) -> float:
    s_max = d.y_max if hp.s_max is None else hp.s_max
    if s_max < d.y_max:
        raise ConfigError(f"s_max={s_max!r} is below the largest observed time {d.y_max!r}")
    return float(s_max)


def initial_state(d: Dataset, hp: Hyperparameters,
                  partition: TimePartition | None = None) -> ModelState:
    """beta = 0 and prior-mean increments; by default ``round(alpha)`` splits."""
    s_max = resolve_s_max(d, hp)
    if partition is None:
        partition = quantile_partition(d, min(int(round(hp.alpha)), hp.J_max), s_max)
    return ModelState(np.zeros(d.p), partition, prior_mean_increments(partition, hp))


# --------------------------------------------------------------------------
# the kernel
# --------------------------------------------------------------------------

class ChainKernel:
    """Mutable single-chain state with the caches the moves need."""

    def __init__(self, d: Dataset, hp: Hyperparameters, cfg: SamplerConfig,
                 state: ModelState):
        if len(state.beta) != d.p:
            raise ValidationError(f"beta has length {len(state.beta)}, dataset has p={d.p}")
        s_max = state.partition.s_max
        if s_max < d.y_max:
            raise ValidationError(f"s_max={s_max!r} below the largest observed time")
        self.hp = hp
        self.cfg = cfg
        self.s_max = s_max
        order = np.argsort(d.time, kind="stable")
        self.y = np.ascontiguousarray(d.time[order])
        self.delta = d.event[order].astype(float)
        self.XT = np.ascontiguousarray(d.X[order].T)
        self.sum_delta_x = self.XT @ self.delta
        self.ev_mask = self.delta == 1
        self.y_ev = self.y[self.ev_mask]
        self.ev_cum = np.concatenate(([0], np.cumsum(self.delta))).astype(float)
        self.p = d.p

        self.candidates = d.candidate_splits(s_max)
        self.fixed = cfg.fixed_partition
        splits = state.partition.splits
        if self.fixed:
            self.in_part = None
        else:
            if state.J > hp.J_max:
                raise ConfigError(f"initial J={state.J} exceeds J_max={hp.J_max}")
            pos = np.searchsorted(self.candidates, splits)
            if len(splits) and (len(self.candidates) == 0 or not np.array_equal(
                    self.candidates[np.minimum(pos, len(self.candidates) - 1)], splits)):
                raise ConfigError("reversible-jump chains need initial splits at observed event times")
            self.in_part = np.zeros(len(self.candidates), dtype=bool)
            self.in_part[pos] = True
        if cfg.lattice_prior and not self.fixed:
            self.log_Z = log_lattice_mass(self.candidates, s_max, hp.J_max)
        else:
            self.log_Z = np.zeros(hp.J_max + 2)

        J_top = max(hp.J_max, state.J) + 1
        probs = [move_probabilities(min(J, hp.J_max) if not self.fixed else J, hp, self.fixed)
                 for J in range(J_top + 1)]
        self.p_bi = np.array([m.bi for m in probs])
        self.p_di = np.array([m.di for m in probs])
        self.move_cdf = np.cumsum([m.as_tuple() for m in probs], axis=1)

        self.beta = state.beta.copy()
        self.s = state.partition.s.copy()
        self.h = state.h.copy()
        self.eta = self.beta @ self.XT if self.p else np.zeros(len(self.y))
        self.w = np.exp(self.eta)

        self.beta_step = np.broadcast_to(
            np.asarray(cfg.beta_step, dtype=float), (self.p,)).copy()
        self.h_step = float(cfg.h_step)
        self._n_adapt_beta = np.zeros(self.p)
        self._n_adapt_h = 0
        self.adapting = False
        self.tally = {m: [0, 0] for m in MOVES}
        self._sums_dirty = True
        self._hazard_dirty = True
        self._Hw = None
        self._stats = None
        self._partition_changed()

    # ---- state access -----------------------------------------------------

    @property
    def J(self) -> int:
        return len(self.s) - 2

    def state(self) -> ModelState:
        return ModelState(self.beta.copy(), TimePartition(self.s.copy()), self.h.copy())

    # ---- caches -------------------------------------------------------------

    def _refresh_sums(self):
        w = self.w
        self._S0 = np.concatenate((np.cumsum(w[::-1])[::-1], [0.0]))
        self._S1 = np.concatenate((np.cumsum((self.y * w)[::-1])[::-1], [0.0]))
        self._sums_dirty = False
        self._stats = None

    def _sums_between(self, ia: int, ib: int, lo: float, hi: float) -> tuple[float, float]:
        """Event count and ``sum_l Delta(y_l) exp(eta_l)`` over ``(lo, hi]``.

        ``ia``/``ib`` are the numbers of subjects with ``y <= lo``/``y <= hi``.
        """
        S0, S1 = self._S0, self._S1
        E = (S1[ia] - S1[ib]) - lo * (S0[ia] - S0[ib]) + (hi - lo) * S0[ib]
        return float(self.ev_cum[ib] - self.ev_cum[ia]), max(float(E), 0.0)

    def _interval_stats(self):
        if self._sums_dirty:
            self._refresh_sums()
        if self._stats is None:
            idx = self.y.searchsorted(self.s, side="right")
            ia, ib = idx[:-1], idx[1:]
            S0, S1 = self._S0, self._S1
            E = (S1[ia] - S1[ib]) - self.s[:-1] * (S0[ia] - S0[ib]) + self._widths * S0[ib]
            counts = self.ev_cum[ib] - self.ev_cum[ia]
            self._stats = (counts, np.maximum(E, 0.0))
        return self._stats

    def _partition_changed(self):
        self._widths = np.diff(self.s)
        self._shape = increment_shape(self.s[:-1], self.s[1:], self.hp)
        self._stats = None
        self._hazard_dirty = True

    def _cum_hazard_at_y(self) -> np.ndarray:
        if self._hazard_dirty:
            knots = np.concatenate(([0.0], np.cumsum(self.h)))
            self._H = np.interp(self.y, self.s, knots)
            self._hazard_dirty = False
            self._Hw = None
        return self._H

    def log_likelihood(self) -> float:
        H = self._cum_hazard_at_y()
        j = np.searchsorted(self.s, self.y_ev, side="left")
        rates = self.h / self._widths
        ll = (float(np.sum(self.eta[self.ev_mask])) + float(np.sum(np.log(rates[j - 1])))
              - float(H @ self.w))
        return ll

    # ---- adaptation ---------------------------------------------------------

    def _adapt_beta(self, m: int, accepted: bool):
        self._n_adapt_beta[m] += 1
        gain = self._n_adapt_beta[m] ** -0.6
        self.beta_step[m] *= math.exp(gain * (float(accepted) - self.cfg.target_accept))

    def _adapt_h(self, rate: float):
        self._n_adapt_h += 1
        gain = self._n_adapt_h ** -0.6
        self.h_step *= math.exp(gain * (rate - self.cfg.target_accept))

    # ---- moves --------------------------------------------------------------

    def move_rp(self, rng: np.random.Generator) -> int:
        """Update each coefficient in random order; returns the number accepted."""
        if self.p == 0:
            return 0
        flat = self.cfg.flat_likelihood
        if not flat:
            H = self._cum_hazard_at_y()
            if self._Hw is None:
                self._Hw = float(H @ self.w)
        order = rng.permutation(self.p)
        z = rng.standard_normal(self.p)
        log_u = np.log(rng.random(self.p))
        n_acc = 0
        for i in range(self.p):
            m = order[i]
            step = self.beta_step[m] * z[i]
            eta_new = self.eta + step * self.XT[m]
            w_new = np.exp(eta_new)
            if flat:
                dll = 0.0
            else:
                Hw_new = float(H @ w_new)
                dll = step * self.sum_delta_x[m] - (Hw_new - self._Hw)
            accepted = log_u[i] < dll and math.isfinite(dll)
            self.tally["RP"][1] += 1
            if accepted:
                self.tally["RP"][0] += 1
                n_acc += 1
                self.beta[m] += step
                self.eta = eta_new
                self.w = w_new
                self._sums_dirty = True
                if not flat:
                    self._Hw = Hw_new
            if self.adapting:
                self._adapt_beta(m, accepted)
        return n_acc

    def move_bh(self, rng: np.random.Generator) -> int:
        """Log-scale random walk on all increments (conditionally independent)."""
        shape = self._shape
        if self.cfg.flat_likelihood:
            a, b = shape, self.hp.c0
        else:
            counts, E = self._interval_stats()
            a = counts + shape
            b = E / self._widths + self.hp.c0
        n = len(self.h)
        z = self.h_step * rng.standard_normal(n)
        log_u = np.log(rng.random(n))
        h_new = self.h * np.exp(z)
        # full conditional ~ h^(a-1) exp(-b h); the extra z is d log h
        log_r = a * z - b * (h_new - self.h)
        acc = (log_u < log_r) & (h_new > 0) & (h_new < np.inf)
        n_acc = int(acc.sum())
        self.tally["BH"][0] += n_acc
        self.tally["BH"][1] += n
        if n_acc:
            self.h = np.where(acc, h_new, self.h)
            self._hazard_dirty = True
        if self.adapting:
            self._adapt_h(n_acc / n)
        return n_acc

    def _split_dll(self, lo, mid, hi, h_m, h_lo, h_hi) -> float:
        """Log-likelihood gain of replacing ``h_m`` on (lo, hi] by the split pair."""
        if self.cfg.flat_likelihood:
            return 0.0
        if self._sums_dirty:
            self._refresh_sums()
        ia, ic, ib = self.y.searchsorted((lo, mid, hi), side="right").tolist()
        a, b, D = mid - lo, hi - mid, hi - lo
        d_lo, E_lo = self._sums_between(ia, ic, lo, mid)
        d_hi, E_hi = self._sums_between(ic, ib, mid, hi)
        _, E_m = self._sums_between(ia, ib, lo, hi)
        r_lo, r_hi, r_m = h_lo / a, h_hi / b, h_m / D
        return (d_lo * math.log(r_lo) + d_hi * math.log(r_hi) - (d_lo + d_hi) * math.log(r_m)
                - (r_lo * E_lo + r_hi * E_hi - r_m * E_m))

    def _lgp(self, h, lo, hi):
        shape = self.hp.c0 * self.hp.eta0 * (hi ** self.hp.kappa0 - lo ** self.hp.kappa0)
        return _log_gamma_density(h, shape, self.hp.c0)

    def birth_log_ratio(self, s_star: float, U: float, n_free: int):
        """Log acceptance ratio of adding a split at ``s_star`` with perturbation ``U``.

        Returns ``(log_A, j, h_lo, h_hi)`` where ``j`` is the 1-based interval
        being split.
        """
        hp = self.hp
        J = self.J
        j = int(self.s.searchsorted(s_star))
        lo, hi = float(self.s[j - 1]), float(self.s[j])
        h_m = float(self.h[j - 1])
        a, b, D = s_star - lo, hi - s_star, hi - lo
        h_lo, h_hi = split_transform(h_m, lo, s_star, hi, U)
        if not (0.0 < h_lo < math.inf and 0.0 < h_hi < math.inf):
            # increments outside double range: the proposal is unrepresentable
            return -math.inf, j, h_lo, h_hi
        dll = self._split_dll(lo, s_star, hi, h_m, h_lo, h_hi)
        log_prior = (math.log(hp.alpha / (J + 1))
                     + self.log_Z[J] - self.log_Z[J + 1]
                     + self._lgp(h_lo, lo, s_star) + self._lgp(h_hi, s_star, hi)
                     - self._lgp(h_m, lo, hi)
                     + math.log((2 * J + 3) * (2 * J + 2) * a * b / (self.s_max ** 2 * D)))
        # the Uniform(0, 1) density of U is 1 and drops out
        log_prop = (math.log(self.p_di[J + 1]) + math.log(n_free)
                    - math.log(self.p_bi[J]) - math.log(J + 1))
        log_jac = split_log_jacobian(h_m, a, b, U)
        return dll + log_prior + log_prop + log_jac, j, h_lo, h_hi

    def death_log_ratio(self, k: int, n_free_after: int):
        """Log acceptance ratio of removing interior split ``s[k]`` (1 <= k <= J).

        Returns ``(log_A, h_merged, U_star)``.
        """
        hp = self.hp
        J = self.J
        lo, mid, hi = float(self.s[k - 1]), float(self.s[k]), float(self.s[k + 1])
        h_lo, h_hi = float(self.h[k - 1]), float(self.h[k])
        a, b, D = mid - lo, hi - mid, hi - lo
        h_m, U = merge_transform(h_lo, h_hi, lo, mid, hi)
        dll = -self._split_dll(lo, mid, hi, h_m, h_lo, h_hi)
        log_prior = (math.log(J / hp.alpha)
                     + self.log_Z[J] - self.log_Z[J - 1]
                     + self._lgp(h_m, lo, hi)
                     - self._lgp(h_lo, lo, mid) - self._lgp(h_hi, mid, hi)
                     + math.log(self.s_max ** 2 * D / ((2 * J + 1) * (2 * J) * a * b)))
        log_prop = (math.log(self.p_bi[J - 1]) + math.log(J)
                    - math.log(self.p_di[J]) - math.log(n_free_after))
        if not 0.0 < h_m < math.inf:
            return -math.inf, h_m, U
        log_jac = -_log_jacobian(h_m, a, b, *merge_log_u(h_lo, h_hi, a, b))
        return dll + log_prior + log_prop + log_jac, h_m, U

    def _apply_birth(self, j, s_star, h_lo, h_hi):
        self.s = np.insert(self.s, j, s_star)
        self.h = np.concatenate((self.h[:j - 1], (h_lo, h_hi), self.h[j:]))
        self.in_part[np.searchsorted(self.candidates, s_star)] = True
        self._partition_changed()

    def _apply_death(self, k, h_m):
        s_k = self.s[k]
        self.in_part[np.searchsorted(self.candidates, s_k)] = False
        self.s = np.delete(self.s, k)
        self.h = np.concatenate((self.h[:k - 1], (h_m,), self.h[k + 1:]))
        self._partition_changed()

    def move_bi(self, rng: np.random.Generator) -> bool:
        self.tally["BI"][1] += 1
        if self.fixed or self.J >= self.hp.J_max:
            return False
        free = np.flatnonzero(~self.in_part)
        if len(free) == 0:
            return False
        s_star = float(self.candidates[free[rng.integers(len(free))]])
        U = rng.random()
        while U == 0.0:
            U = rng.random()
        log_u = math.log(rng.random() or 5e-324)
        log_A, j, h_lo, h_hi = self.birth_log_ratio(s_star, U, len(free))
        if not (math.isfinite(log_A) and log_u < log_A and h_lo > 0 and h_hi > 0):
            return False
        self._apply_birth(j, s_star, h_lo, h_hi)
        self.tally["BI"][0] += 1
        return True

    def move_di(self, rng: np.random.Generator) -> bool:
        self.tally["DI"][1] += 1
        J = self.J
        if self.fixed or J == 0:
            return False
        k = int(rng.integers(J)) + 1
        log_u = math.log(rng.random() or 5e-324)
        n_free_after = len(self.candidates) - (J - 1)
        log_A, h_m, _ = self.death_log_ratio(k, n_free_after)
        if not (math.isfinite(log_A) and log_u < log_A and h_m > 0):
            return False
        self._apply_death(k, h_m)
        self.tally["DI"][0] += 1
        return True

    def step(self, rng: np.random.Generator) -> str:
        u = rng.random()
        cdf = self.move_cdf[self.J]
        if u < cdf[0]:
            self.move_rp(rng)
            return "RP"
        if u < cdf[1]:
            self.move_bh(rng)
            return "BH"
        if u < cdf[2]:
            self.move_bi(rng)
            return "BI"
        self.move_di(rng)
        return "DI"


# --------------------------------------------------------------------------
# functional wrappers
# --------------------------------------------------------------------------

def _quiet():
    return np.errstate(over="ignore", invalid="ignore", divide="ignore")


def update_beta(state: ModelState, d: Dataset, cfg: SamplerConfig,
                rng: np.random.Generator, hp: Hyperparameters | None = None) -> ModelState:
    k = ChainKernel(d, hp or Hyperparameters(), replace(cfg, fixed_partition=True), state)
    with _quiet():
        k.move_rp(rng)
    return k.state()


def update_h(state: ModelState, d: Dataset, hp: Hyperparameters, cfg: SamplerConfig,
             rng: np.random.Generator) -> ModelState:
    k = ChainKernel(d, hp, replace(cfg, fixed_partition=True), state)
    with _quiet():
        k.move_bh(rng)
    return k.state()


def birth_move(state: ModelState, d: Dataset, hp: Hyperparameters, cfg: SamplerConfig,
               rng: np.random.Generator) -> ModelState:
    k = ChainKernel(d, hp, cfg, state)
    with _quiet():
        k.move_bi(rng)
    return k.state()


def death_move(state: ModelState, d: Dataset, hp: Hyperparameters, cfg: SamplerConfig,
               rng: np.random.Generator) -> ModelState:
    k = ChainKernel(d, hp, cfg, state)
    with _quiet():
        k.move_di(rng)
    return k.state()


def birth_log_acceptance(state: ModelState, d: Dataset, hp: Hyperparameters,
                         cfg: SamplerConfig, s_star: float, U: float):
    """Log acceptance ratio and proposed state for a birth at ``s_star``."""
    k = ChainKernel(d, hp, cfg, state)
    ci = np.searchsorted(k.candidates, s_star)
    if ci >= len(k.candidates) or k.candidates[ci] != s_star or k.in_part[ci]:
        raise ValueError(f"{s_star!r} is not an available candidate split")
    n_free = int((~k.in_part).sum())
    log_A, j, h_lo, h_hi = k.birth_log_ratio(s_star, U, n_free)
    k._apply_birth(j, s_star, h_lo, h_hi)
    return log_A, k.state()


def death_log_acceptance(state: ModelState, d: Dataset, hp: Hyperparameters,
                         cfg: SamplerConfig, split_index: int):
    """Log acceptance ratio, proposed state and ``U*`` for removing ``s[split_index]``."""
    k = ChainKernel(d, hp, cfg, state)
    n_free_after = len(k.candidates) - (k.J - 1)
    log_A, h_m, U = k.death_log_ratio(split_index, n_free_after)
    k._apply_death(split_index, h_m)
    return log_A, k.state(), U


# --------------------------------------------------------------------------
# chains
# --------------------------------------------------------------------------

def chain_rng(seed: int, chain_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chain_id,)))


def run_chain(d: Dataset, hp: Hyperparameters, cfg: SamplerConfig,
              init: ModelState | None = None, chain_id: int = 0) -> SampleChain:
    """Run one chain; deterministic given ``cfg.seed`` and ``chain_id``."""
    validate_dataset(d)
    if init is None:
        init = initial_state(d, hp)
    kernel = ChainKernel(d, hp, cfg, init)
    rng = chain_rng(cfg.seed, chain_id)
    samples, iters, lls = [], [], []
    burnin_tally = None
    move = None
    kernel.adapting = cfg.adapt and cfg.n_burnin > 0
    it = 0
    try:
        with _quiet():
            for it in range(1, cfg.n_iter + 1):
                if it == cfg.n_burnin + 1:
                    kernel.adapting = False
                    burnin_tally = {m: tuple(v) for m, v in kernel.tally.items()}
                    kernel.tally = {m: [0, 0] for m in MOVES}
                move = kernel.step(rng)
                if it > cfg.n_burnin and (it - cfg.n_burnin) % cfg.thin == 0:
                    ll = 0.0 if cfg.flat_likelihood else kernel.log_likelihood()
                    if not math.isfinite(ll):
                        raise NumericError("non-finite log-likelihood")
                    samples.append(kernel.state())
                    iters.append(it)
                    lls.append(ll)
    except (NumericError, ValidationError, FloatingPointError) as exc:
        raise NumericError(f"chain {chain_id} iteration {it} move {move}: {exc}") from exc
    if burnin_tally is None:
        burnin_tally = {m: (0, 0) for m in MOVES}
    return SampleChain(
        samples=samples,
        iterations=np.array(iters, dtype=int),
        log_lik=np.array(lls, dtype=float),
        acceptance={m: tuple(v) for m, v in kernel.tally.items()},
        seed=cfg.seed,
        chain_id=chain_id,
        s_max=kernel.s_max,
        step_sizes={"beta_step": kernel.beta_step.tolist(), "h_step": kernel.h_step},
        burnin_acceptance=burnin_tally,
    )


def _run_chain_job(args):
    return run_chain(*args)


def run_chains(d: Dataset, hp: Hyperparameters, cfg: SamplerConfig, n_chains: int = 2,
               init: ModelState | Sequence[ModelState] | None = None,
               workers: int = 1) -> list[SampleChain]:
    """Run independent chains, in worker processes when ``workers > 1``.

    Chain ``k`` draws from the stream ``SeedSequence(cfg.seed, spawn_key=(k,))``
    so results do not depend on ``workers``.
    """
    if n_chains < 1:
        raise ConfigError("need at least one chain")
    inits = list(init) if isinstance(init, (list, tuple)) else [init] * n_chains
    jobs = [(d, hp, cfg, inits[k], k) for k in range(n_chains)]
    if workers > 1 and n_chains > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n_chains)) as ex:
            return list(ex.map(_run_chain_job, jobs))
    return [_run_chain_job(job) for job in jobs]


def as_states(chains) -> list[ModelState]:
    """Pool draws from a chain, a list of chains, or pass a list of states through."""
    if isinstance(chains, SampleChain):
        return list(chains.samples)
    chains = list(chains)
    if chains and isinstance(chains[0], SampleChain):
        return [st for ch in chains for st in ch.samples]
    return chains
