"""Bayesian piecewise-exponential proportional-hazards regression with a
gamma-process prior on the baseline hazard and a reversible-jump sampler
over the time partition."""

__version__ = "0.1.0"

from .data import Dataset, load_dataset, parse_dataset
from .errors import (ConfigError, ConvergenceError, DataError, GPRJError, NumericError,
                     ParseError, SchemaError, ValidationError)
from .fitting import FitResult, ModelSpec, fit_model
from .likelihood import ModelState, TimePartition, log_likelihood
from .priors import Hyperparameters
from .rjmcmc import SampleChain, SamplerConfig, run_chain, run_chains

__all__ = [
    "ConfigError", "ConvergenceError", "DataError", "Dataset", "FitResult", "GPRJError",
    "Hyperparameters", "ModelSpec", "ModelState", "NumericError", "ParseError",
    "SampleChain", "SamplerConfig", "SchemaError", "TimePartition", "ValidationError",
    "fit_model", "load_dataset", "log_likelihood", "parse_dataset", "run_chain", "run_chains",
]
