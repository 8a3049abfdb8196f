"""Flat ``key = value`` run configuration.

A config file is a list of ``key = value`` lines; ``#`` starts a comment.
Several files may be layered, later ones overriding earlier ones.  A bare
name such as ``scenario1`` refers to a shipped preset.  Recognised keys:

model          rj | eq | uq
J              interior splits for the ``eq`` model
eta0 kappa0 c0 alpha rho C_cap J_max s_max
               prior hyperparameters
n_iter n_burnin thin beta_step h_step adapt target_accept
               sampler settings (``beta_step`` may be a comma list)
seed chains workers
scenario       1-4, loads the matching scenario defaults
n censor_target baseline weibull_shape weibull_rate pwl_b pwl_k beta_true
               simulation settings (``baseline`` is weibull | pwl)
n_datasets study_models
               study size and the models fitted per replicate (comma list;
               the first is the referent for relative widths)
grid_points grid_max level n_bins
               summary curves and histograms
time_col event_col covariates
               input data columns
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from .errors import ConfigError
from .fitting import MODEL_KINDS, ModelSpec
from .priors import Hyperparameters
from .rjmcmc import SamplerConfig
from .simulator import SCENARIOS, PiecewiseLinear, ScenarioConfig, Weibull

_SECTION = "run"
_HP_KEYS = {f.name for f in fields(Hyperparameters)}
_SAMPLER_KEYS = {"n_iter", "n_burnin", "thin", "beta_step", "h_step", "adapt", "target_accept"}
_SCENARIO_KEYS = {"scenario", "n", "censor_target", "baseline", "weibull_shape", "weibull_rate",
                  "pwl_b", "pwl_k", "beta_true"}
_OTHER_KEYS = {"model", "J", "seed", "chains", "workers", "n_datasets", "study_models",
               "grid_points", "grid_max", "level", "n_bins", "time_col", "event_col",
               "covariates"}
KNOWN_KEYS = _HP_KEYS | _SAMPLER_KEYS | _SCENARIO_KEYS | _OTHER_KEYS


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("gprj.presets").iterdir()
                  if p.name.endswith(".cfg"))


def read_config_text(source: str) -> str:
    path = Path(source)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    if source in preset_names():
        return resources.files("gprj.presets").joinpath(source + ".cfg").read_text(encoding="utf-8")
    raise ConfigError(f"config file not found: {source}")


def parse_config_text(text: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string(f"[{_SECTION}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if parser.sections() != [_SECTION]:
        raise ConfigError("section headers are not allowed in config files")
    out = dict(parser[_SECTION])
    unknown = sorted(set(out) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return out


def _typed(key: str, value: str, kind):
    try:
        if kind is bool:
            low = value.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if kind is int:
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        return kind(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {value!r} as {kind.__name__}") from None


def _floats(key: str, value: str) -> tuple[float, ...]:
    return tuple(_typed(key, v.strip(), float) for v in value.split(",") if v.strip())


@dataclass
class RunConfig:
    """Resolved settings for one command invocation."""

    values: dict[str, str] = field(default_factory=dict)

    @classmethod
    def load(cls, sources: Sequence[str] = (), overrides: dict | None = None) -> "RunConfig":
        values: dict[str, str] = {}
        for src in sources:
            values.update(parse_config_text(read_config_text(src)))
        for k, v in (overrides or {}).items():
            if v is not None:
                values[k] = str(v)
        cfg = cls(values)
        cfg.validate()
        return cfg

    def get(self, key: str, kind=str, default=None):
        if key not in self.values:
            return default
        return _typed(key, self.values[key], kind)

    def validate(self) -> None:
        """Build every derived object once so errors surface before any work starts."""
        self.hyperparameters()
        self.sampler()
        self.model()
        self.scenario()
        self.study_models()
        if self.chains < 1:
            raise ConfigError("chains must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.grid_points < 2:
            raise ConfigError("grid_points must be at least 2")
        if not 0 < self.level < 1:
            raise ConfigError("level must lie in (0, 1)")
        if self.n_bins < 1:
            raise ConfigError("n_bins must be at least 1")
        if self.n_datasets < 1:
            raise ConfigError("n_datasets must be at least 1")

    @property
    def seed(self) -> int:
        return self.get("seed", int, 0)

    @property
    def chains(self) -> int:
        return self.get("chains", int, 2)

    @property
    def workers(self) -> int:
        return self.get("workers", int, 1)

    @property
    def grid_points(self) -> int:
        return self.get("grid_points", int, 200)

    @property
    def grid_max(self) -> float | None:
        return self.get("grid_max", float)

    @property
    def level(self) -> float:
        return self.get("level", float, 0.95)

    @property
    def n_bins(self) -> int:
        return self.get("n_bins", int, 50)

    @property
    def n_datasets(self) -> int:
        return self.get("n_datasets", int, 100)

    def data_columns(self) -> dict:
        cov = self.get("covariates")
        return {"time_col": self.get("time_col", str, "time"),
                "event_col": self.get("event_col", str, "event"),
                "covariates": [c.strip() for c in cov.split(",") if c.strip()] if cov else None}

    def hyperparameters(self) -> Hyperparameters:
        kw = {}
        for f in fields(Hyperparameters):
            if f.name in self.values:
                kind = int if f.name == "J_max" else float
                kw[f.name] = self.get(f.name, kind)
        return Hyperparameters(**kw)

    def sampler(self) -> SamplerConfig:
        kw = {"seed": self.seed}
        for key in ("n_iter", "n_burnin", "thin"):
            if key in self.values:
                kw[key] = self.get(key, int)
        for key in ("h_step", "target_accept"):
            if key in self.values:
                kw[key] = self.get(key, float)
        if "adapt" in self.values:
            kw["adapt"] = self.get("adapt", bool)
        if "beta_step" in self.values:
            steps = _floats("beta_step", self.values["beta_step"])
            kw["beta_step"] = steps[0] if len(steps) == 1 else steps
        return SamplerConfig(**kw)

    def model(self, kind: str | None = None) -> ModelSpec:
        kind = kind or self.get("model", str, "rj")
        if kind not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}, got {kind!r}")
        return ModelSpec(kind=kind, hp=self.hyperparameters(), J=self.get("J", int, 10))

    def study_models(self) -> list[ModelSpec]:
        kinds = [k.strip() for k in self.get("study_models", str, "rj,eq").split(",") if k.strip()]
        if not kinds:
            raise ConfigError("study_models is empty")
        return [self.model(k) for k in kinds]

    def scenario(self) -> ScenarioConfig:
        number = self.get("scenario", int)
        if number is None:
            base = SCENARIOS[1]
        elif number in SCENARIOS:
            base = SCENARIOS[number]
        else:
            raise ConfigError(f"scenario must be one of {sorted(SCENARIOS)}, got {number}")
        kw = {"seed": self.seed}
        if "n" in self.values:
            kw["n"] = self.get("n", int)
        if "censor_target" in self.values:
            kw["censor_target"] = self.get("censor_target", float)
        if "beta_true" in self.values:
            kw["beta_true"] = _floats("beta_true", self.values["beta_true"])
        family = self.get("baseline", str)
        baseline = base.baseline
        if family is not None:
            if family == "weibull":
                baseline = Weibull() if not isinstance(baseline, Weibull) else baseline
            elif family == "pwl":
                baseline = PiecewiseLinear() if not isinstance(baseline, PiecewiseLinear) else baseline
            else:
                raise ConfigError(f"baseline must be weibull or pwl, got {family!r}")
        if isinstance(baseline, Weibull):
            baseline = Weibull(self.get("weibull_shape", float, baseline.kappa),
                               self.get("weibull_rate", float, baseline.eta))
            if not (baseline.kappa > 0 and baseline.eta > 0):
                raise ConfigError("Weibull shape and rate must be positive")
        else:
            baseline = PiecewiseLinear(self.get("pwl_b", float, baseline.b),
                                       self.get("pwl_k", float, baseline.k))
            if not (baseline.b > 0 and baseline.k > 0):
                raise ConfigError("piecewise-linear b and k must be positive")
        return replace(base, baseline=baseline, **kw)

    def echo(self) -> dict:
        """Fully resolved configuration for manifests."""
        return {
            "values": dict(sorted(self.values.items())),
            "hyperparameters": self.hyperparameters().as_dict(),
            "sampler": self.sampler().as_dict(),
            "chains": self.chains,
        }
