"""Text formats for retained draws, summary tables and run manifests.

Samples file
------------
Header lines start with ``#``::

    # gprj-samples 1
    # s_max <float>
    # seed <int>
    # chain <int>
    # acceptance <json>

followed by one whitespace-separated record per retained draw::

    iteration loglik p beta_1 .. beta_p J s_1 .. s_J K h_1 .. h_K

``p``, ``J`` and ``K`` are length prefixes and ``K`` must equal ``J + 1``.
Floats are written with ``repr`` so that a file round-trips exactly.
"""
from __future__ import annotations

import csv
import io as _io
import json
import platform
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError
from .likelihood import ModelState, TimePartition
from .rjmcmc import SampleChain

FORMAT_TAG = "gprj-samples"
FORMAT_VERSION = 1


class SampleFileError(ParseError):
    """Malformed samples file; ``row`` is the 1-based record index (0 for the header)."""


def _fmt(v) -> str:
    return repr(float(v))


def format_samples(chain: SampleChain) -> str:
    acc = {k: list(v) for k, v in sorted(chain.acceptance.items())}
    lines = [
        f"# {FORMAT_TAG} {FORMAT_VERSION}",
        f"# s_max {_fmt(chain.s_max)}",
        f"# seed {int(chain.seed)}",
        f"# chain {int(chain.chain_id)}",
        f"# acceptance {json.dumps(acc, sort_keys=True)}",
    ]
    for it, ll, st in zip(chain.iterations, chain.log_lik, chain.samples):
        fields = [str(int(it)), _fmt(ll), str(len(st.beta))]
        fields += [_fmt(b) for b in st.beta]
        fields.append(str(st.J))
        fields += [_fmt(s) for s in st.partition.splits]
        fields.append(str(len(st.h)))
        fields += [_fmt(h) for h in st.h]
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def write_samples(chain: SampleChain, path) -> None:
    Path(path).write_text(format_samples(chain), encoding="utf-8")


def _take_count(tokens: list[str], pos: int, record: int, what: str) -> tuple[int, int]:
    if pos >= len(tokens):
        raise SampleFileError(f"record {record}: missing {what} count", row=record)
    try:
        k = int(tokens[pos])
    except ValueError:
        raise SampleFileError(f"record {record}: bad {what} count {tokens[pos]!r}", row=record)
    if k < 0 or pos + 1 + k > len(tokens):
        raise SampleFileError(f"record {record}: {what} count {k} does not match record length",
                              row=record)
    return k, pos + 1


def _floats(tokens: Sequence[str], record: int) -> np.ndarray:
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise SampleFileError(f"record {record}: {exc}", row=record) from None


def parse_samples(text: str) -> SampleChain:
    header: dict[str, str] = {}
    records: list[str] = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(" ")
            header[key] = value.strip()
        elif line.strip():
            records.append(line)
    if header.get(FORMAT_TAG) != str(FORMAT_VERSION):
        raise SampleFileError(f"not a {FORMAT_TAG} v{FORMAT_VERSION} file", row=0)
    try:
        s_max = float(header["s_max"])
        seed = int(header["seed"])
        chain_id = int(header["chain"])
        acceptance = {k: (int(v[0]), int(v[1]))
                      for k, v in json.loads(header.get("acceptance", "{}")).items()}
    except (KeyError, ValueError, TypeError, IndexError) as exc:
        raise SampleFileError(f"bad header: {exc}", row=0) from None

    iters, lls, states = [], [], []
    for r, line in enumerate(records, start=1):
        tok = line.split()
        if len(tok) < 3:
            raise SampleFileError(f"record {r}: truncated", row=r)
        try:
            iters.append(int(tok[0]))
        except ValueError:
            raise SampleFileError(f"record {r}: bad iteration {tok[0]!r}", row=r) from None
        lls.append(_floats(tok[1:2], r)[0])
        p, pos = _take_count(tok, 2, r, "beta")
        beta = _floats(tok[pos:pos + p], r)
        J, pos = _take_count(tok, pos + p, r, "split")
        splits = _floats(tok[pos:pos + J], r)
        K, pos = _take_count(tok, pos + J, r, "increment")
        h = _floats(tok[pos:pos + K], r)
        if pos + K != len(tok):
            raise SampleFileError(f"record {r}: trailing fields", row=r)
        if K != J + 1:
            raise SampleFileError(f"record {r}: {K} increments for {J} splits", row=r)
        try:
            states.append(ModelState(beta, TimePartition.from_splits(splits, s_max), h))
        except ValueError as exc:
            raise SampleFileError(f"record {r}: {exc}", row=r) from None
    return SampleChain(states, np.array(iters, dtype=int), np.array(lls, dtype=float),
                       acceptance, seed, chain_id, s_max)


def read_samples(path) -> SampleChain:
    return parse_samples(Path(path).read_text(encoding="utf-8"))


def format_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(format_table(header, rows), encoding="utf-8")


def write_dict_table(path, rows: Sequence[dict]) -> None:
    header = list(rows[0]) if rows else []
    write_table(path, header, ([row[k] for k in header] for row in rows))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def software_versions() -> dict[str, str]:
    import scipy

    from . import __version__
    return {"gprj": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def write_manifest(path, command: str, config: dict, seed: int, extra: dict | None = None) -> None:
    """Everything needed to re-run: command, resolved config, seed and versions."""
    manifest = {"command": command, "config": config, "seed": int(seed),
                "versions": software_versions()}
    if extra:
        manifest.update(extra)
    write_json(path, manifest)
