"""Right-censored survival records: CSV ingestion, validation and caching.

A :class:`Dataset` is immutable once built.  Besides the per-subject view it
keeps column arrays (``time``, ``event``, ``X``) that the sampler reads on
every iteration, and the sorted list of distinct event times that serves as
the pool of candidate split positions.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, SchemaError, ValidationError

TIME_COLUMN = "time"
EVENT_COLUMN = "event"


@dataclass(frozen=True)
class Subject:
    y: float
    delta: int
    x: tuple[float, ...]


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Survival data in column form.

    Parameters
    ----------
    time : (n,) observed times ``min(T, C)``
    event : (n,) event indicators, 1 for an observed failure
    X : (n, p) covariate matrix
    covariate_names : names of the ``p`` covariate columns
    """

    time: np.ndarray
    event: np.ndarray
    X: np.ndarray
    covariate_names: tuple[str, ...] = ()
    event_times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        time = _readonly(np.array(self.time, dtype=float).reshape(-1))
        event = _readonly(np.array(self.event, dtype=np.int64).reshape(-1))
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(len(time), -1) if len(time) else X.reshape(0, 0)
        X = _readonly(X)
        if X.shape[0] != len(time) or len(event) != len(time):
            raise ValidationError(
                f"dimension mismatch: {len(time)} times, {len(event)} events, "
                f"{X.shape[0]} covariate rows")
        names = tuple(self.covariate_names) or tuple(
            f"x{m + 1}" for m in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ValidationError(
                f"{len(names)} covariate names for {X.shape[1]} columns")
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "event", event)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "covariate_names", names)
        ev = np.unique(time[event == 1]) if len(time) else np.empty(0)
        object.__setattr__(self, "event_times", _readonly(ev))

    @classmethod
    def from_subjects(cls, subjects: Sequence[Subject],
                      covariate_names: Sequence[str] = ()) -> "Dataset":
        dims = {len(s.x) for s in subjects}
        if len(dims) > 1:
            raise ValidationError(
                f"subjects have differing covariate dimensions {sorted(dims)}")
        p = dims.pop() if dims else len(covariate_names)
        X = np.array([s.x for s in subjects], dtype=float).reshape(len(subjects), p)
        return cls(time=[s.y for s in subjects], event=[s.delta for s in subjects],
                   X=X, covariate_names=tuple(covariate_names))

    @property
    def n(self) -> int:
        return len(self.time)

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def y_max(self) -> float:
        return float(self.time.max()) if self.n else 0.0

    @property
    def n_events(self) -> int:
        return int(self.event.sum())

    @property
    def subjects(self) -> list[Subject]:
        return [Subject(float(y), int(d), tuple(float(v) for v in x))
                for y, d, x in zip(self.time, self.event, self.X)]

    def candidate_splits(self, s_max: float) -> np.ndarray:
        """Distinct event times strictly inside ``(0, s_max)``."""
        ev = self.event_times
        return ev[(ev > 0) & (ev < s_max)]

    def fingerprint(self) -> str:
        """SHA-256 of the canonical CSV serialization."""
        return hashlib.sha256(to_csv(self).encode("utf-8")).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.covariate_names == other.covariate_names
                and np.array_equal(self.time, other.time)
                and np.array_equal(self.event, other.event)
                and np.array_equal(self.X, other.X))

    __hash__ = None


def _parse_float(cell: str, row: int, column: str) -> float:
    try:
        return float(cell)
    except (TypeError, ValueError):
        raise ParseError(
            f"row {row}: column {column!r} has non-numeric value {cell!r}",
            row=row) from None


def parse_dataset(text: str, time_col: str = TIME_COLUMN,
                  event_col: str = EVENT_COLUMN,
                  covariates: Sequence[str] | None = None) -> Dataset:
    """Parse CSV text with a header row into a :class:`Dataset`.

    Every column other than the time and event columns is a covariate, in
    header order, unless ``covariates`` names an explicit subset.  Row
    numbers in error messages count data rows from 1.
    """
    reader = csv.reader(io.StringIO(text.lstrip("﻿")))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("empty input: header row required") from None
    for col in (time_col, event_col):
        if col not in header:
            raise SchemaError(f"missing required column {col!r}")
    if covariates is None:
        covariates = [h for h in header if h not in (time_col, event_col)]
    else:
        covariates = list(covariates)
        for col in covariates:
            if col not in header:
                raise SchemaError(f"missing covariate column {col!r}")
    t_idx = header.index(time_col)
    e_idx = header.index(event_col)
    x_idx = [header.index(c) for c in covariates]

    times, events, rows = [], [], []
    for row_no, cells in enumerate(reader, start=1):
        if not cells or all(not c.strip() for c in cells):
            continue
        if len(cells) != len(header):
            raise ParseError(
                f"row {row_no}: expected {len(header)} fields, got {len(cells)}",
                row=row_no)
        y = _parse_float(cells[t_idx], row_no, time_col)
        d = _parse_float(cells[e_idx], row_no, event_col)
        if d not in (0.0, 1.0):
            raise ValidationError(f"row {row_no}: event must be 0 or 1, got {cells[e_idx]!r}")
        if not math.isfinite(y):
            raise ValidationError(f"row {row_no}: time is not finite")
        if y < 0:
            raise ValidationError(f"row {row_no}: negative time {y!r}")
        if y == 0 and d == 1.0:
            raise ValidationError(f"row {row_no}: event at time 0")
        times.append(y)
        events.append(int(d))
        rows.append([_parse_float(cells[i], row_no, c) for i, c in zip(x_idx, covariates)])
    X = np.array(rows, dtype=float).reshape(len(rows), len(covariates))
    return Dataset(time=times, event=events, X=X, covariate_names=tuple(covariates))


def load_dataset(path, **kwargs) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_dataset(fh.read(), **kwargs)


def validate_dataset(d: Dataset) -> Dataset:
    """Return ``d`` unchanged if it can be fitted, otherwise raise."""
    if d.n == 0:
        raise ValidationError("dataset has no subjects")
    if not np.all(np.isfinite(d.time)) or not np.all(np.isfinite(d.X)):
        bad = np.flatnonzero(~np.isfinite(d.time) | ~np.all(np.isfinite(d.X), axis=1))
        raise ValidationError(f"non-finite value for subject(s) {(bad + 1).tolist()[:10]}")
    if np.any(d.time < 0):
        raise ValidationError("negative observed time")
    if not np.all(np.isin(d.event, (0, 1))):
        raise ValidationError("event indicators must be 0 or 1")
    if np.any((d.time == 0) & (d.event == 1)):
        raise ValidationError("event at time 0")
    if d.n_events == 0:
        raise ValidationError("no events: all subjects are censored")
    if d.y_max <= 0:
        raise ValidationError("maximum observed time must be positive")
    return d


def to_csv(d: Dataset, float_format=repr) -> str:
    """Serialize in the ingestion schema; ``repr`` floats round-trip exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([TIME_COLUMN, EVENT_COLUMN, *d.covariate_names])
    for y, e, x in zip(d.time, d.event, d.X):
        w.writerow([float_format(float(y)), int(e), *(float_format(float(v)) for v in x)])
    return buf.getvalue()


def write_dataset(d: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv(d))


def subset(d: Dataset, index: Iterable[int]) -> Dataset:
    idx = np.asarray(list(index), dtype=int)
    return Dataset(d.time[idx], d.event[idx], d.X[idx], d.covariate_names)
