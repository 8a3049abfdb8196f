"""Posterior summaries on a time grid: baseline hazard, baseline survival,
the distribution of the number of splits and of split positions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .likelihood import ModelState
from .rjmcmc import as_states

DEFAULT_GRID_POINTS = 200


@dataclass(frozen=True)
class GridCurve:
    grid: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float = 0.95

    def rows(self):
        return zip(self.grid, self.mean, self.lower, self.upper)


@dataclass(frozen=True)
class PartitionPosterior:
    j_values: np.ndarray      # 0..max J seen
    j_counts: np.ndarray
    bin_edges: np.ndarray
    split_hist: np.ndarray    # mass per bin, divided by the number of draws

    @property
    def n_samples(self) -> int:
        return int(self.j_counts.sum())

    def j_probabilities(self) -> np.ndarray:
        return self.j_counts / self.j_counts.sum()


def default_grid(s_max: float, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """``n_points`` equally spaced times on ``(0, s_max]``."""
    return s_max * np.arange(1, n_points + 1) / n_points


def _check_grid(grid, states: list[ModelState], allow_zero: bool) -> np.ndarray:
    grid = np.asarray(grid, dtype=float).ravel()
    if not states:
        raise ValidationError("no retained samples")
    s_max = min(st.partition.s_max for st in states)
    if np.any(grid > s_max):
        raise ValidationError(f"grid extends beyond s_max={s_max!r}")
    if np.any(grid < 0) or (not allow_zero and np.any(grid <= 0)):
        raise ValidationError("grid times must be positive")
    return grid


def _summarize(grid, values: np.ndarray, level: float) -> GridCurve:
    tail = (1.0 - level) / 2.0
    lower, upper = np.quantile(values, [tail, 1.0 - tail], axis=0)
    return GridCurve(grid, values.mean(axis=0), lower, upper, level)


def hazard_matrix(states: list[ModelState], grid: np.ndarray) -> np.ndarray:
    out = np.empty((len(states), len(grid)))
    for r, st in enumerate(states):
        j = np.searchsorted(st.partition.s, grid, side="left")
        out[r] = st.rates[np.clip(j - 1, 0, st.J)]
    return out


def cumulative_hazard_matrix(states: list[ModelState], grid: np.ndarray) -> np.ndarray:
    out = np.empty((len(states), len(grid)))
    for r, st in enumerate(states):
        out[r] = np.interp(grid, st.partition.s, np.concatenate(([0.0], np.cumsum(st.h))))
    return out


def baseline_hazard_curve(chain, grid, level: float = 0.95) -> GridCurve:
    """Pointwise posterior mean and equal-tailed band of ``h0(t)``.

    Each draw's hazard is the step function ``h_j / (s_j - s_{j-1})`` on
    ``(s_{j-1}, s_j]``.
    """
    states = as_states(chain)
    grid = _check_grid(grid, states, allow_zero=False)
    return _summarize(grid, hazard_matrix(states, grid), level)


def baseline_survival_curve(chain, grid, level: float = 0.95) -> GridCurve:
    states = as_states(chain)
    grid = _check_grid(grid, states, allow_zero=True)
    return _summarize(grid, np.exp(-cumulative_hazard_matrix(states, grid)), level)


def partition_posterior(chain, n_bins: int = 50, s_max: float | None = None) -> PartitionPosterior:
    """Histogram of ``J`` and of split positions pooled over draws."""
    states = as_states(chain)
    if not states:
        raise ValidationError("no retained samples")
    if s_max is None:
        s_max = states[0].partition.s_max
    Js = np.array([st.J for st in states])
    counts = np.bincount(Js)
    edges = np.linspace(0.0, s_max, n_bins + 1)
    splits = np.concatenate([st.partition.splits for st in states]) if Js.sum() else np.empty(0)
    # right-closed bins (edge_k, edge_k+1]
    idx = np.clip(np.searchsorted(edges, splits, side="left") - 1, 0, n_bins - 1)
    hist = np.bincount(idx, minlength=n_bins) / len(states)
    return PartitionPosterior(np.arange(len(counts)), counts, edges, hist)


def coefficient_summary(chain, level: float = 0.95) -> dict[str, np.ndarray]:
    """Posterior mean, median and equal-tailed interval per coefficient."""
    states = as_states(chain)
    beta = np.array([st.beta for st in states])
    tail = (1.0 - level) / 2.0
    lower, upper = np.quantile(beta, [tail, 1.0 - tail], axis=0)
    return {"mean": beta.mean(axis=0), "median": np.median(beta, axis=0),
            "sd": beta.std(axis=0, ddof=1) if len(beta) > 1 else np.zeros(beta.shape[1]),
            "lower": lower, "upper": upper}
