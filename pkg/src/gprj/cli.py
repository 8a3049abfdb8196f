"""Command-line entry point.

    gprj simulate  --config scenario1 --seed 7 --out sim/
    gprj fit       --data sim/data.csv --config scenario1 --config gp_eq --out fit_eq/
    gprj summarize --fit fit_eq/ --out summ/
    gprj compare   --fit fit_rj/ fit_eq/ --out cmp/
    gprj study     --config scenario1 --seed 1 --out study/

Exit status: 0 success, 1 usage or configuration error, 2 data error,
3 convergence gate failed (outputs are still written).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .comparison import compare_models, fit_summary
from .config import RunConfig, preset_names
from .data import Dataset, load_dataset, to_csv, validate_dataset
from .diagnostics import PSRF_THRESHOLD, passes_gate, psrf_report
from .errors import ConfigError, DataError, GPRJError, NumericError
from .fitting import fit_model
from .io import read_json, read_samples, write_dict_table, write_json, write_manifest, \
    write_samples, write_table
from .rjmcmc import SampleChain, resolve_s_max
from .simulator import censoring_horizon, run_scenario_study, simulate_dataset
from .summaries import (baseline_hazard_curve, baseline_survival_curve, coefficient_summary,
                        default_grid, partition_posterior)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_GATE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _prepare_out(path: str) -> Path:
    out = Path(path)
    if out.exists() and not out.is_dir():
        raise ConfigError(f"output path exists and is not a directory: {out}")
    return out


def _covariate_names(fit_dir: Path, p: int) -> tuple[str, ...]:
    data = fit_dir / "data.csv"
    if data.is_file():
        d = load_dataset(data)
        if d.p == p:
            return d.covariate_names
    return tuple(f"beta{m + 1}" for m in range(p))


def _summary_grid(cfg: RunConfig, s_max: float) -> np.ndarray:
    top = cfg.grid_max if cfg.grid_max is not None else s_max
    if not 0 < top <= s_max:
        raise ConfigError(f"grid_max={top!r} must lie in (0, s_max={s_max!r}]")
    return default_grid(top, cfg.grid_points)


def write_summaries(chains: list[SampleChain], names, cfg: RunConfig, out: Path) -> None:
    """Coefficient table, hazard and survival curves, J and split-position histograms."""
    s_max = min(ch.s_max for ch in chains)
    grid = _summary_grid(cfg, s_max)
    coef = coefficient_summary(chains, cfg.level)
    write_table(out / "beta_summary.csv", ["parameter", "mean", "median", "sd", "lower", "upper"],
                [(name, coef["mean"][m], coef["median"][m], coef["sd"][m], coef["lower"][m],
                  coef["upper"][m]) for m, name in enumerate(names)])
    curve_header = ["t", "mean", "lower", "upper"]
    write_table(out / "hazard.csv", curve_header,
                baseline_hazard_curve(chains, grid, cfg.level).rows())
    surv_grid = np.concatenate(([0.0], grid))
    write_table(out / "survival.csv", curve_header,
                baseline_survival_curve(chains, surv_grid, cfg.level).rows())
    post = partition_posterior(chains, cfg.n_bins, s_max)
    write_table(out / "j_posterior.csv", ["J", "count", "probability"],
                zip(post.j_values.tolist(), post.j_counts.tolist(), post.j_probabilities()))
    write_table(out / "splits.csv", ["bin_left", "bin_right", "mass"],
                zip(post.bin_edges[:-1], post.bin_edges[1:], post.split_hist))


def _read_fit_dir(fit_dir: Path) -> list[SampleChain]:
    files = sorted(fit_dir.glob("chain_*.samples"))
    if not files:
        raise DataError(f"no chain_*.samples files in {fit_dir}")
    return [read_samples(f) for f in files]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_simulate(args, cfg: RunConfig) -> int:
    sc = cfg.scenario()
    censoring_horizon(sc)
    out = _prepare_out(args.out)
    out.mkdir(parents=True, exist_ok=True)
    d = simulate_dataset(sc)
    (out / "data.csv").write_text(to_csv(d), encoding="utf-8")
    write_manifest(out / "manifest.json", "simulate", cfg.echo(), cfg.seed,
                   {"scenario": {"n": sc.n, "censor_target": sc.censor_target,
                                 "baseline": repr(sc.baseline), "beta_true": list(sc.beta_true)},
                    "dataset_fingerprint": d.fingerprint()})
    print(f"wrote {out / 'data.csv'}: n={d.n}, censored={1 - d.event.mean():.3f}")
    return EXIT_OK


def cmd_fit(args, cfg: RunConfig) -> int:
    d = validate_dataset(load_dataset(args.data, **cfg.data_columns()))
    spec = cfg.model()
    s_max = resolve_s_max(d, spec.hp)
    _summary_grid(cfg, s_max)
    sampler = cfg.sampler()
    out = _prepare_out(args.out)
    out.mkdir(parents=True, exist_ok=True)

    fit = fit_model(d, spec, sampler, n_chains=cfg.chains, workers=cfg.workers)
    for ch in fit.chains:
        write_samples(ch, out / f"chain_{ch.chain_id}.samples")
    (out / "data.csv").write_text(to_csv(d), encoding="utf-8")
    if fit.psrf is not None:
        write_table(out / "psrf.csv", ["parameter", "psrf", "flagged", "note"],
                    [(r.parameter, r.psrf, int(r.flagged), r.note) for r in fit.psrf])
    summ = fit_summary(fit.chains, d)
    write_json(out / "fit_summary.json", {
        **summ.as_dict(), "model": spec.label, "dataset_fingerprint": d.fingerprint(),
        "converged": fit.converged, "psrf_threshold": PSRF_THRESHOLD,
        "acceptance": {str(ch.chain_id): {m: ch.acceptance_rate(m) for m in sorted(ch.acceptance)}
                       for ch in fit.chains},
    })
    write_summaries(fit.chains, d.covariate_names, cfg, out)
    write_manifest(out / "manifest.json", "fit", cfg.echo(), sampler.seed,
                   {"model": spec.label, "dataset_fingerprint": d.fingerprint()})
    print(f"{spec.label}: DIC={summ.dic:.3f} LPML={summ.lpml:.3f} "
          f"draws={summ.n_samples_used} converged={fit.converged}")
    if not fit.converged:
        bad = ", ".join(f"{r.parameter}={r.psrf:.3f}" for r in fit.psrf if r.flagged)
        print(f"PSRF gate failed: {bad}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def cmd_summarize(args, cfg: RunConfig) -> int:
    fit_dir = Path(args.fit[0])
    chains = _read_fit_dir(fit_dir)
    s_max = min(ch.s_max for ch in chains)
    _summary_grid(cfg, s_max)
    names = _covariate_names(fit_dir, chains[0].samples[0].beta.size if chains[0].samples else 0)
    out = _prepare_out(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_summaries(chains, names, cfg, out)
    status = EXIT_OK
    if len(chains) >= 2:
        rows = psrf_report(chains, names)
        write_table(out / "psrf.csv", ["parameter", "psrf", "flagged", "note"],
                    [(r.parameter, r.psrf, int(r.flagged), r.note) for r in rows])
        if not passes_gate(rows):
            status = EXIT_GATE
    write_manifest(out / "manifest.json", "summarize", cfg.echo(), cfg.seed,
                   {"fit_dir": str(fit_dir)})
    print(f"wrote summaries for {len(chains)} chain(s) to {out}")
    return status


def cmd_compare(args, cfg: RunConfig) -> int:
    if len(args.fit) < 2:
        raise ConfigError("compare needs at least two --fit directories")
    fits = {}
    data: Dataset | None = None
    for path in args.fit:
        fit_dir = Path(path)
        d = load_dataset(fit_dir / "data.csv")
        if data is None:
            data = d
        elif d.fingerprint() != data.fingerprint():
            raise DataError(f"{fit_dir} was fitted to a different dataset")
        label = read_json(fit_dir / "fit_summary.json").get("model", fit_dir.name) \
            if (fit_dir / "fit_summary.json").is_file() else fit_dir.name
        key = label if label not in fits else f"{label} ({fit_dir.name})"
        fits[key] = _read_fit_dir(fit_dir)
    out = _prepare_out(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summaries = {name: fit_summary(chains, data) for name, chains in fits.items()}
    rows, pbf = compare_models(summaries)
    write_dict_table(out / "comparison.csv", rows)
    names = list(summaries)
    write_table(out / "pbf.csv", ["model"] + names,
                ([a] + [float(v) for v in row] for a, row in zip(names, pbf)))
    write_manifest(out / "manifest.json", "compare", cfg.echo(), cfg.seed,
                   {"fits": [str(p) for p in args.fit], "dataset_fingerprint": data.fingerprint()})
    for row in rows:
        print(f"{row['model']}: DIC={row['dic']:.3f} LPML={row['lpml']:.3f} "
              f"dDIC={row['delta_dic']:.3f} ({row['support']})")
    return EXIT_OK


def cmd_study(args, cfg: RunConfig) -> int:
    sc = cfg.scenario()
    censoring_horizon(sc)
    models = cfg.study_models()
    sampler = cfg.sampler()
    grid_max = cfg.grid_max if cfg.grid_max is not None else 40.0
    grid = default_grid(grid_max, cfg.grid_points)
    out = _prepare_out(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(rep):
        flags = " ".join(f"{k}:{'ok' if v else 'gate'}" for k, v in rep.converged.items())
        print(f"replicate {rep.replicate + 1}/{cfg.n_datasets} {flags}", flush=True)

    result = run_scenario_study(sc, cfg.n_datasets, models, sampler, n_chains=cfg.chains,
                                seed=cfg.seed, grid=grid, workers=cfg.workers, progress=progress)
    name = sc.name or "custom"
    rows = [{**r, "scenario": name} for r in result.rows]
    write_dict_table(out / "study_rows.csv", rows)
    write_dict_table(out / "study_summary.csv", result.summary())
    labels = [m.label for m in models]
    write_table(out / "replicates.csv",
                ["replicate", "censored_fraction"] + [f"{k}_{f}" for k in labels
                                                      for f in ("converged", "max_psrf", "median_J")],
                ([rep.replicate, rep.censored_fraction]
                 + [v for k in labels for v in (int(rep.converged[k]), rep.max_psrf[k],
                                                rep.median_J[k])]
                 for rep in result.replicates))
    write_table(out / "hazard_mean.csv", ["t"] + labels,
                ([t] + [float(np.nanmean([rep.hazard_means[k][i] for rep in result.replicates]))
                        for k in labels] for i, t in enumerate(grid)))
    write_manifest(out / "manifest.json", "study", cfg.echo(), cfg.seed,
                   {"models": labels, "n_datasets": cfg.n_datasets})
    for row in result.summary():
        print(f"{row['model']} {row['coefficient']}: PB={row['percent_bias']:.2f} "
              f"CP={row['coverage']:.2f} RW={row['relative_width']:.3f} "
              f"(used {row['n_used']}, excluded {row['n_excluded']})")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "summarize": cmd_summarize,
            "compare": cmd_compare, "study": cmd_study}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gprj", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", action="append", default=[],
                       help="config file or preset name; repeat to layer "
                            f"(presets: {', '.join(preset_names())})")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--chains", type=int, help="number of chains (default 2)")
        p.add_argument("--workers", type=int, help="worker processes")
        if name == "fit":
            p.add_argument("--data", required=True, help="CSV with time, event and covariates")
        if name in ("summarize", "compare"):
            p.add_argument("--fit", nargs="+", required=True, help="fit output directory")
        if name == "study":
            p.add_argument("--n-datasets", type=int, help="number of replicates")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed, "chains": args.chains, "workers": args.workers,
                 "n_datasets": getattr(args, "n_datasets", None)}
    try:
        cfg = RunConfig.load(args.config, overrides)
        if args.command == "fit" and not Path(args.data).is_file():
            raise DataError(f"data file not found: {args.data}")
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, NumericError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except GPRJError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
