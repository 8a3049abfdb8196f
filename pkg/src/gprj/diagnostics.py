"""Gelman-Rubin potential scale reduction factors for multi-chain runs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .rjmcmc import SampleChain

PSRF_THRESHOLD = 1.05


def psrf(chain_a, chain_b, *more) -> float:
    """Potential scale reduction factor of two or more equal-length traces.

    ``W`` is the mean within-chain variance, ``B = n * var(chain means)`` and
    ``V = (n-1)/n W + B/n``; the factor is ``sqrt(V / W)``.  Traces of
    unequal length are truncated to the shortest.
    """
    traces = [np.asarray(t, dtype=float).ravel() for t in (chain_a, chain_b, *more)]
    n = min(len(t) for t in traces)
    if n < 2:
        raise ValidationError("psrf needs traces of length >= 2")
    x = np.stack([t[:n] for t in traces])
    W = float(np.mean(np.var(x, axis=1, ddof=1)))
    if not W > 0:
        raise ValidationError("psrf undefined: every chain is constant (W = 0)")
    B = n * float(np.var(x.mean(axis=1), ddof=1))
    V = (n - 1) / n * W + B / n
    return float(np.sqrt(V / W))


@dataclass(frozen=True)
class PSRFRow:
    parameter: str
    psrf: float
    flagged: bool
    note: str = ""


def monitored_traces(chain: SampleChain, names: Sequence[str] = ()) -> dict[str, np.ndarray]:
    """Scalar traces tracked for convergence: each beta, log-likelihood and J."""
    beta = chain.beta
    if not names:
        names = [f"beta{m + 1}" for m in range(beta.shape[1])]
    out = {name: beta[:, m] for m, name in enumerate(names)}
    out["log_lik"] = np.asarray(chain.log_lik, dtype=float)
    out["J"] = chain.J.astype(float)
    return out


def psrf_report(chains: Sequence[SampleChain], names: Sequence[str] = (),
                threshold: float = PSRF_THRESHOLD) -> list[PSRFRow]:
    """PSRF per monitored parameter, flagging values at or above ``threshold``.

    A parameter that is the same constant in every chain (``J`` under a fixed
    partition) is reported with ``psrf = 1`` and note ``constant``.  Constant
    but disagreeing chains are flagged.
    """
    if len(chains) < 2:
        raise ValidationError("psrf_report needs at least two chains")
    per_chain = [monitored_traces(ch, names) for ch in chains]
    rows = []
    for key in per_chain[0]:
        traces = [pc[key] for pc in per_chain]
        n = min(len(t) for t in traces)
        stacked = np.stack([t[:n] for t in traces])
        if n >= 2 and np.all(stacked == stacked.flat[0]):
            rows.append(PSRFRow(key, 1.0, False, "constant"))
            continue
        try:
            value = psrf(*traces)
        except ValidationError as exc:
            rows.append(PSRFRow(key, float("inf"), True, str(exc)))
            continue
        rows.append(PSRFRow(key, value, not value < threshold))
    return rows


def passes_gate(rows: Sequence[PSRFRow]) -> bool:
    return not any(r.flagged for r in rows)
