"""Simulated right-censored data for the four benchmark scenarios, and a
replicate study that fits several models to each simulated dataset.

Event times come from inverse-transform sampling of a proportional-hazards
model, ``T = H0^{-1}(-log(V) exp(-x'beta))``.  Censoring times are uniform on
``(0, c)``; the horizon ``c`` is calibrated once per scenario on a fixed
pilot sample so that the expected censored fraction hits the target.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import ConfigError
from .fitting import ModelSpec, fit_model
from .rjmcmc import SamplerConfig
from .summaries import baseline_hazard_curve, coefficient_summary

PILOT_SIZE = 10 ** 5
PILOT_SEED = 20_190_101


@dataclass(frozen=True)
class Weibull:
    """``H0(t) = eta * t**kappa``; hazard ``kappa * eta * t**(kappa - 1)``."""

    kappa: float = 0.8
    eta: float = 0.05

    def hazard(self, t):
        return self.kappa * self.eta * np.power(t, self.kappa - 1.0)

    def cumhaz(self, t):
        return weibull_cumhaz(t, self.kappa, self.eta)

    def inverse_cumhaz(self, H):
        return np.power(np.asarray(H, dtype=float) / self.eta, 1.0 / self.kappa)


@dataclass(frozen=True)
class PiecewiseLinear:
    """V-shaped hazard: ``b`` at 0, down to ``k`` at t=40, back up with half the slope."""

    b: float = 0.1
    k: float = 0.0005

    def hazard(self, t):
        return pwl_hazard(t, self.b, self.k)

    def cumhaz(self, t):
        return pwl_cumhaz(t, self.b, self.k)

    def inverse_cumhaz(self, H):
        return pwl_inverse_cumhaz(H, self.b, self.k)


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 300
    censor_target: float = 0.3
    baseline: Weibull | PiecewiseLinear = field(default_factory=Weibull)
    beta_true: tuple[float, ...] = (0.5, 0.8, -0.5)
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if not 0.0 <= self.censor_target < 1.0:
            raise ConfigError(f"censor_target must lie in [0, 1), got {self.censor_target!r}")
        object.__setattr__(self, "beta_true", tuple(float(b) for b in self.beta_true))
        if len(self.beta_true) != 3:
            raise ConfigError("scenarios use three covariates (two normal, one Bernoulli)")


SCENARIOS = {
    1: ScenarioConfig(300, 0.3, Weibull(), name="scenario1"),
    2: ScenarioConfig(300, 0.3, PiecewiseLinear(), name="scenario2"),
    3: ScenarioConfig(300, 0.5, Weibull(), name="scenario3"),
    4: ScenarioConfig(100, 0.3, Weibull(), name="scenario4"),
}


def weibull_cumhaz(t, kappa: float = 0.8, eta: float = 0.05):
    return eta * np.power(t, kappa)


def pwl_hazard(t, b: float = 0.1, k: float = 0.0005):
    t = np.asarray(t, dtype=float)
    return np.where(t <= 40.0, b - (b - k) * t / 40.0, (3.0 * k - b) / 2.0 + (b - k) * t / 80.0)


def pwl_cumhaz(t, b: float = 0.1, k: float = 0.0005):
    t = np.asarray(t, dtype=float)
    first = b * np.minimum(t, 40.0) - (b - k) * np.minimum(t, 40.0) ** 2 / 80.0
    u = np.maximum(t - 40.0, 0.0)
    return first + k * u + (b - k) * u ** 2 / 160.0


def pwl_inverse_cumhaz(H, b: float = 0.1, k: float = 0.0005):
    """Invert the piecewise-quadratic cumulative hazard (stable root forms)."""
    H = np.asarray(H, dtype=float)
    H40 = 20.0 * (b + k)
    # (b-k)/80 t^2 - b t + H = 0, smaller root
    early = 2.0 * H / (b + np.sqrt(np.maximum(b * b - (b - k) * H / 20.0, 0.0)))
    # (b-k)/160 u^2 + k u - R = 0 with u = t - 40
    R = np.maximum(H - H40, 0.0)
    late = 40.0 + 2.0 * R / (k + np.sqrt(k * k + (b - k) * R / 40.0))
    return np.where(H <= H40, early, late)


def simulate_event_times(sc: ScenarioConfig, rng: np.random.Generator, size: int):
    """Covariates and uncensored event times."""
    X = np.empty((size, 3))
    X[:, :2] = rng.standard_normal((size, 2))
    X[:, 2] = rng.binomial(1, 0.5, size)
    V = rng.random(size)
    target = -np.log1p(-V) * np.exp(-(X @ np.asarray(sc.beta_true)))
    return X, sc.baseline.inverse_cumhaz(target)


def censoring_fraction(T: np.ndarray, c: float) -> float:
    """Expected share censored by ``C ~ Uniform(0, c)``: ``mean(min(T, c)) / c``."""
    return float(np.mean(np.minimum(T, c)) / c)


@lru_cache(maxsize=32)
def calibrate_censoring(sc: ScenarioConfig, pilot_size: int = PILOT_SIZE) -> float:
    """Censoring horizon ``c`` whose expected censored share is ``sc.censor_target``.

    Returns ``inf`` for a zero target.  Depends only on the scenario's
    distribution (not on ``sc.seed`` or ``sc.n``).
    """
    if sc.censor_target == 0:
        return math.inf
    _, T = simulate_event_times(sc, np.random.default_rng(PILOT_SEED), pilot_size)
    target = sc.censor_target
    lo, hi = 1e-12, float(np.max(T))
    while censoring_fraction(T, hi) > target:
        hi *= 2.0
        if hi > 1e300:
            raise ConfigError(f"censoring target {target!r} unattainable")
    if censoring_fraction(T, lo) < target:
        raise ConfigError(f"censoring target {target!r} unattainable")
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if censoring_fraction(T, mid) > target:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-12:
            break
    c = math.sqrt(lo * hi)
    if abs(censoring_fraction(T, c) - target) > 0.01:
        raise ConfigError(f"censoring calibration missed target {target!r}")
    return c


def censoring_horizon(sc: ScenarioConfig) -> float:
    """Calibrated horizon, cached on the parts of ``sc`` that determine it."""
    return calibrate_censoring(replace(sc, n=1, seed=0, name=""))


def simulate_dataset(sc: ScenarioConfig, rng: np.random.Generator | None = None) -> Dataset:
    if rng is None:
        rng = np.random.default_rng(sc.seed)
    horizon = censoring_horizon(sc)
    X, T = simulate_event_times(sc, rng, sc.n)
    if math.isinf(horizon):
        C = np.full(sc.n, np.inf)
    else:
        C = rng.uniform(0.0, horizon, sc.n)
    y = np.minimum(T, C)
    return Dataset(y, (T <= C).astype(int), X, ("x1", "x2", "x3"))


# --------------------------------------------------------------------------
# replicate study
# --------------------------------------------------------------------------

def replicate_seeds(seed: int, replicate: int, n_models: int) -> tuple[np.random.Generator, list[int]]:
    data_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate,)))
    chain_seeds = [int(np.random.SeedSequence(seed, spawn_key=(replicate, m + 1)).generate_state(1)[0])
                   for m in range(n_models)]
    return data_rng, chain_seeds


@dataclass
class ReplicateResult:
    replicate: int
    censored_fraction: float
    rows: list[dict]
    converged: dict[str, bool]
    max_psrf: dict[str, float]
    hazard_means: dict[str, np.ndarray]
    median_J: dict[str, float]
    acceptance: dict[str, dict[str, float]]


def run_replicate(sc: ScenarioConfig, replicate: int, models: Sequence[ModelSpec],
                  cfg: SamplerConfig, n_chains: int = 2, seed: int = 0,
                  grid: np.ndarray | None = None, level: float = 0.95) -> ReplicateResult:
    data_rng, chain_seeds = replicate_seeds(seed, replicate, len(models))
    d = simulate_dataset(sc, data_rng)
    rows, converged, max_psrf, curves, med_J, acc = [], {}, {}, {}, {}, {}
    for spec, chain_seed in zip(models, chain_seeds):
        fit = fit_model(d, spec, replace(cfg, seed=chain_seed), n_chains=n_chains)
        converged[spec.label] = fit.converged
        max_psrf[spec.label] = max((r.psrf for r in fit.psrf), default=float("nan")) \
            if fit.psrf else float("nan")
        summ = coefficient_summary(fit.chains, level)
        for m, truth in enumerate(sc.beta_true):
            lo, hi = float(summ["lower"][m]), float(summ["upper"][m])
            rows.append({
                "scenario": sc.name, "replicate": replicate, "model": spec.label,
                "coefficient": d.covariate_names[m], "truth": truth,
                "estimate": float(summ["median"][m]), "lower": lo, "upper": hi,
                "covered": int(lo <= truth <= hi), "width": hi - lo,
                "converged": int(fit.converged),
            })
        if grid is not None:
            # grid points past this replicate's s_max are left as NaN
            inside = grid <= fit.chains[0].s_max
            curve = np.full(len(grid), np.nan)
            curve[inside] = baseline_hazard_curve(fit.chains, grid[inside], level).mean
            curves[spec.label] = curve
        med_J[spec.label] = float(np.median([st.J for ch in fit.chains for st in ch.samples]))
        acc[spec.label] = {mv: float(np.mean([ch.acceptance_rate(mv) for ch in fit.chains]))
                           for mv in ("RP", "BH", "BI", "DI")}
    return ReplicateResult(replicate, float(1.0 - d.event.mean()), rows, converged,
                           max_psrf, curves, med_J, acc)


def _replicate_job(args):
    return run_replicate(*args)


@dataclass
class StudyResult:
    scenario: ScenarioConfig
    models: list[ModelSpec]
    replicates: list[ReplicateResult]

    @property
    def rows(self) -> list[dict]:
        return [row for rep in self.replicates for row in rep.rows]

    def summary(self) -> list[dict]:
        """Percent bias, coverage and relative width per model and coefficient.

        Replicates whose fit failed the PSRF gate are excluded and counted.
        Relative width uses the first model as the referent.
        """
        ref = self.models[0].label
        out = []
        for spec in self.models:
            ok = [rep for rep in self.replicates if rep.converged[spec.label]]
            for m, truth in enumerate(self.scenario.beta_true):
                def pick(rep, label):
                    return next(r for r in rep.rows
                                if r["model"] == label and r["coefficient"] == f"x{m + 1}")
                est = np.array([pick(rep, spec.label)["estimate"] for rep in ok])
                cov = np.array([pick(rep, spec.label)["covered"] for rep in ok])
                both = [rep for rep in ok if rep.converged[ref]]
                rw = np.array([pick(rep, spec.label)["width"] / pick(rep, ref)["width"]
                               for rep in both])
                out.append({
                    "model": spec.label, "coefficient": f"x{m + 1}", "truth": truth,
                    "percent_bias": float(100.0 * np.mean((est - truth) / truth)) if len(est) else float("nan"),
                    "coverage": float(np.mean(cov)) if len(cov) else float("nan"),
                    "relative_width": float(np.mean(rw)) if len(rw) else float("nan"),
                    "n_used": len(ok), "n_excluded": len(self.replicates) - len(ok),
                })
        return out


def run_scenario_study(sc: ScenarioConfig, n_datasets: int, models: Sequence[ModelSpec],
                       cfg: SamplerConfig, n_chains: int = 2, seed: int = 0,
                       grid: np.ndarray | None = None, workers: int = 1,
                       progress=None) -> StudyResult:
    """Simulate ``n_datasets`` replicates and fit every model to each.

    Replicate ``r`` draws its data from ``SeedSequence(seed, spawn_key=(r,))``,
    so results are independent of ``workers`` and of execution order.
    """
    if n_datasets < 1:
        raise ConfigError("n_datasets must be at least 1")
    models = list(models)
    if grid is not None:
        grid = np.asarray(grid, dtype=float)
    jobs = [(sc, r, models, cfg, n_chains, seed, grid) for r in range(n_datasets)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_replicate_job, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_replicate_job(job))
            if progress is not None:
                progress(results[-1])
    return StudyResult(sc, models, results)
