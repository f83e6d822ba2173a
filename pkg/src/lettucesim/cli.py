"""Command-line entry point.

Subcommands: simulate, verify-monotone, sweep, fit, report,
generate-data. Every command is driven by a config file plus overrides,
writes CSV/JSON artifacts, and is fully reproducible from the config
and seed. Exit codes: 0 success, 1 runtime failure, 2 usage or config
error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ScenarioConfig, load_config, with_seed
from .field import (
    export_ledger_csv,
    export_params_csv,
    export_trajectory_csv,
    sample_params,
    simulate_field,
)
from .fitting import (
    FitSpec,
    fit,
    generate_synthetic,
    read_timeseries_csv,
    write_fit_results_csv,
    write_timeseries_csv,
)
from .metrics import ScenarioSummary, compare, dose_response_sweep, summarize
from .model import NOMINAL_PARAMS, check_cooperativity

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lettucesim",
        description="Simulate and analyze variable-rate nitrogen control of a lettuce field.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument(
            "--config",
            required=config_required,
            help="scenario config path, or builtin:<name> for a shipped scenario",
        )
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out-dir", default=None, help="directory for output files")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )
        p.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")

    p = sub.add_parser("simulate", help="run one scenario and write trajectory + summary")
    add_common(p)

    p = sub.add_parser("verify-monotone", help="check cooperativity and dose-response monotonicity")
    add_common(p)
    p.add_argument("--samples", type=int, default=1000, help="number of sampled states")
    p.add_argument("--param-sets", type=int, default=10, help="perturbed parameter sets for the sweep")
    p.add_argument("--points", type=int, default=20, help="dose grid size for the sweep")

    p = sub.add_parser("sweep", help="dose-response sweep: final biomass vs constant dose")
    add_common(p)
    p.add_argument("--param-sets", type=int, default=10)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--u-max", type=float, default=0.15)
    p.add_argument("--day", type=float, default=None, help="harvest day (default: season length)")

    p = sub.add_parser("fit", help="batch-fit every series in a CSV dataset")
    p.add_argument("--data", required=True, help="observations CSV (plant_id, day, mass_g, kind)")
    p.add_argument("--config", default=None, help="optional config supplying guess/env assumptions")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--free", default="k_l,k_ml,sigma_c,sigma_n,v,j_c,j_n,psi",
                   help="comma-separated parameters to fit; the rest stay fixed at the guess")

    p = sub.add_parser("report", help="merge scenario summaries into one comparison table")
    p.add_argument("summaries", nargs="+", help="summary.json files; the first is the baseline")
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("generate-data", help="write a synthetic observation dataset CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-frac", type=float, default=0.0)
    p.add_argument("--perturbation-frac", type=float, default=0.05)
    p.add_argument("--n-obs", default="3:12", help="observations per series: N or LO:HI")
    p.add_argument("--span", type=float, default=50.0)
    p.add_argument("--spacing", choices=["even", "random"], default="random")
    return parser


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config, args.overrides)
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    return cfg


def _out_dir(args, cfg: ScenarioConfig = None) -> Path:
    out = args.out_dir if args.out_dir is not None else (cfg.out_dir if cfg else ".")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_summary_files(summary: ScenarioSummary, out: Path) -> None:
    (out / "summary.json").write_text(summary.to_json() + "\n")
    with open(out / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["name", "n_plants", "mean", "variance", "threshold", "fraction_above_threshold",
             "total_nitrogen", "min", "q1", "median", "q3", "max"]
        )
        writer.writerow(
            [summary.name, summary.n_plants, repr(summary.mean), repr(summary.variance),
             repr(summary.threshold), repr(summary.fraction_above_threshold),
             repr(summary.total_nitrogen), *(repr(q) for q in summary.five_number)]
        )


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    traj = simulate_field(cfg.field, cfg.policy, cfg.schedule)
    summary = summarize(traj, threshold=cfg.threshold_g, name=cfg.name)
    export_trajectory_csv(traj, out / "trajectory.csv")
    export_ledger_csv(traj, out / "ledger.csv")
    export_params_csv(traj, out / "params.csv")
    _write_summary_files(summary, out)
    print(
        f"{cfg.name}: n={summary.n_plants} mean={summary.mean:.3f} g "
        f"var={summary.variance:.3f} g^2 threshold={summary.threshold:.3f} g "
        f"above={summary.fraction_above_threshold:.2%} nitrogen={summary.total_nitrogen:.3f} g"
    )
    print(f"wrote trajectory.csv, ledger.csv, params.csv, summary.json, summary.csv to {out}")
    return EXIT_OK


def _perturbed_sets(cfg: ScenarioConfig, count: int):
    return [
        sample_params(cfg.field.nominal_params, cfg.field.perturbation_frac, cfg.field.seed, i)
        for i in range(count)
    ]


def cmd_verify_monotone(args) -> int:
    cfg = _load(args)
    env = cfg.field.env.value_at(0.0)
    report = check_cooperativity(
        cfg.field.nominal_params, env, sample_count=args.samples, seed=cfg.field.seed
    )
    print(f"cooperativity: {report.sample_count} sampled states, seed {report.seed}")
    print(f"  min off-diagonal Jacobian entry: {report.min_offdiagonal:.6g}")
    print(f"  min input-gradient entry:        {report.min_input_gradient:.6g}")
    print(f"  min flux value:                  {report.min_flux:.6g}")
    print(f"  violations: {report.violation_count}")
    for kind, state, u, value in report.violations[:20]:
        print(f"    {kind}: state={state} u={u} value={value:.6g}")

    grid = np.linspace(0.0, 2.0 * cfg.field.u_bar, args.points)
    table = dose_response_sweep(
        _perturbed_sets(cfg, args.param_sets),
        grid,
        day=cfg.field.season_days,
        env=cfg.field.env,
        s0=cfg.field.s0,
        dt=cfg.field.dt,
    )
    monotone = table.monotone_rows()
    print(f"dose-response: {int(monotone.sum())}/{len(monotone)} parameter sets monotone")
    for i, ok in enumerate(monotone):
        if not ok:
            print(f"    parameter set {i} is NOT monotone")

    ok = report.passed and bool(monotone.all())
    print("verify-monotone:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_RUNTIME


def cmd_sweep(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg)
    grid = np.linspace(0.0, args.u_max, args.points)
    day = args.day if args.day is not None else cfg.field.season_days
    table = dose_response_sweep(
        _perturbed_sets(cfg, args.param_sets),
        grid,
        day=day,
        env=cfg.field.env,
        s0=cfg.field.s0,
        dt=cfg.field.dt,
    )
    path = out / "dose_response.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param_set", *(repr(float(u)) for u in table.u_grid)])
        for i, row in enumerate(table.final_b):
            writer.writerow([i, *(repr(float(x)) for x in row)])
    monotone = table.monotone_rows()
    print(f"wrote {path}; {int(monotone.sum())}/{len(monotone)} rows monotone")
    return EXIT_OK


def cmd_fit(args) -> int:
    try:
        dataset = read_timeseries_csv(args.data)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load dataset {args.data}: {exc}") from exc
    free = tuple(name.strip() for name in args.free.split(",") if name.strip())
    from .model import PARAM_NAMES

    unknown = set(free) - set(PARAM_NAMES)
    if unknown:
        raise ConfigError(f"unknown parameters in --free: {sorted(unknown)}")
    fixed = frozenset(set(PARAM_NAMES) - set(free))
    if args.config is not None:
        cfg = _load(args)
        spec = FitSpec(
            guess=cfg.field.nominal_params,
            fixed=fixed,
            env=cfg.field.env,
            u=cfg.field.u_bar,
            s0=cfg.field.s0,
        )
    else:
        spec = FitSpec(guess=NOMINAL_PARAMS, fixed=fixed)

    def run_one(series):
        try:
            return fit(spec, series)
        except Exception as exc:  # record and keep going
            return f"{type(exc).__name__}: {exc}"

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(run_one, dataset))
    else:
        results = [run_one(series) for series in dataset]

    out = _out_dir(args)
    rows = [(series.plant_id, result) for series, result in zip(dataset, results)]
    write_fit_results_csv(out / "fit_results.csv", rows)

    nrmses = [r.nrmse for r in results if not isinstance(r, str)]
    failures = len(results) - len(nrmses)
    if nrmses:
        counts, edges = np.histogram(nrmses, bins=20, range=(0.0, max(max(nrmses), 1e-9)))
        with open(out / "nrmse_hist.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_left", "bin_right", "count"])
            for i, c in enumerate(counts):
                writer.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), int(c)])
        print(
            f"fit {len(nrmses)}/{len(results)} series (failures: {failures}); "
            f"median NRMSE {float(np.median(nrmses)):.4f}"
        )
    else:
        print(f"all {len(results)} fits failed", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote fit_results.csv, nrmse_hist.csv to {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    summaries = []
    for path in args.summaries:
        try:
            summaries.append(ScenarioSummary.from_json(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read summary {path}: {exc}") from exc
    base = summaries[0]
    for s in summaries[1:]:
        if s.n_plants != base.n_plants:
            print(
                f"warning: {s.name} has {s.n_plants} plants but baseline {base.name} has {base.n_plants}",
                file=sys.stderr,
            )

    header = f"{'scenario':<24}{'mean':>9}{'variance':>10}{'above':>8}{'nitrogen':>10}{'var ratio':>10}{'d_above':>9}{'N ratio':>9}"
    print(header)
    rows = []
    for s in summaries:
        rep = compare(base, s)
        rows.append((s, rep))
        print(
            f"{s.name:<24}{s.mean:>9.2f}{s.variance:>10.2f}"
            f"{(np.asarray(s.final_outputs) >= base.threshold).mean():>8.2%}{s.total_nitrogen:>10.2f}"
            f"{rep.variance_ratio:>10.3f}{rep.fraction_delta:>+9.2%}{rep.nitrogen_ratio:>9.3f}"
        )
    print(f"baseline threshold: {base.threshold:.3f} g ({base.name})")

    if args.out_dir is not None:
        out = _out_dir(args)
        with open(out / "comparison.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["scenario", "n_plants", "mean", "variance", "fraction_above_baseline_threshold",
                 "total_nitrogen", "variance_ratio", "fraction_delta", "nitrogen_ratio"]
            )
            for s, rep in rows:
                frac = float((np.asarray(s.final_outputs) >= base.threshold).mean())
                writer.writerow(
                    [s.name, s.n_plants, repr(s.mean), repr(s.variance), repr(frac),
                     repr(s.total_nitrogen), repr(rep.variance_ratio), repr(rep.fraction_delta),
                     repr(rep.nitrogen_ratio)]
                )
        # shared-bin histograms over the pooled output range, for paired plots
        pooled = np.concatenate([np.asarray(s.final_outputs) for s in summaries])
        edges = np.histogram_bin_edges(pooled, bins=20)
        with open(out / "histograms.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scenario", "bin_left", "bin_right", "count"])
            for s in summaries:
                counts, _ = np.histogram(np.asarray(s.final_outputs), bins=edges)
                for i, c in enumerate(counts):
                    writer.writerow([s.name, repr(float(edges[i])), repr(float(edges[i + 1])), int(c)])
        print(f"wrote comparison.csv, histograms.csv to {out}")
    return EXIT_OK


def cmd_generate_data(args) -> int:
    if ":" in args.n_obs:
        lo, hi = args.n_obs.split(":", 1)
        n_obs = (int(lo), int(hi))
    else:
        n_obs = int(args.n_obs)
    dataset = generate_synthetic(
        args.count,
        NOMINAL_PARAMS,
        args.perturbation_frac,
        args.seed,
        n_obs=n_obs,
        t_span=args.span,
        noise_frac=args.noise_frac,
        spacing=args.spacing,
    )
    out = Path(args.out)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    write_timeseries_csv(out, dataset)
    print(f"wrote {sum(len(s.times) for s in dataset)} observations for {len(dataset)} series to {out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "verify-monotone": cmd_verify_monotone,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
    "report": cmd_report,
    "generate-data": cmd_generate_data,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
