"""Command-line driver for the benchmark experiments.

Every run writes its CSV files plus ``manifest.json`` (parameters, seed and
library version) into the output directory.  ``tmcmc rerun DIR/manifest.json``
repeats a run from its manifest.

Exit codes: 0 ok, 1 bad arguments, 2 runtime error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from tmcmc import __version__, experiments
from tmcmc.bounds import BOUND_COLUMNS
from tmcmc.diagnostics import SummaryRow, acf, summarize, write_acf_csv, write_csv, write_summary_csv, write_trace_csv
from tmcmc.errors import ChainError, NonFiniteError
from tmcmc.samplers import Schedule

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_ENV = "TMCMC_OUTPUT_DIR"
ACF_LAGS = 50


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _name_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


# -- experiment runners --------------------------------------------------------------


def _schedule(args) -> Schedule:
    try:
        return Schedule(args.n, args.burn_in, args.thin, args.seed)
    except ValueError as exc:
        raise UsageError(f"invalid schedule: {exc}")


def _trace_start(s: Schedule) -> int:
    return s.burn_in + s.thin


def run_challenger(args, out: Path) -> list[str]:
    sched = _schedule(args)
    res = experiments.run_challenger(sched, args.samplers, scales=args.scales, mh_h=args.mh_h)
    write_summary_csv(out / "summary.csv", res.rows)
    names = [f"{s}_{v}" for s in res.chains for v in ("beta1", "beta2")]
    draws = np.hstack([c.draws for c in res.chains.values()])
    write_trace_csv(out / "trace.csv", draws, names, _trace_start(sched), sched.thin)
    acfs = {}
    for s, chain in res.chains.items():
        for key, val in experiments.acf_table(chain, ("beta1", "beta2"), ACF_LAGS).items():
            acfs[f"{s}_{key}"] = val
    write_acf_csv(out / "acf.csv", acfs)
    return [_row_text(r) for r in res.rows]


def run_geo(args, out: Path) -> list[str]:
    sched = _schedule(args)
    rows, lines, traces, acfs = [], [], [], {}
    for n_sites in args.n_sites:
        run = experiments.run_geo(n_sites, sched, factor=args.factor, data_seed=args.data_seed)
        names = experiments.geo_variable_names(n_sites)
        for method, chain in (("TMCMC", run.tmcmc), ("RWMH", run.rwmh)):
            for i in range(3):
                rows.append(summarize_named(chain, i, f"{names[i]}@{n_sites}", method))
        traces.append((n_sites, run.tmcmc.draws[:, :3]))
        for key, val in experiments.acf_table(run.tmcmc, names[:3], ACF_LAGS).items():
            acfs[f"{key}@{n_sites}"] = val
        lines.append(
            f"n_sites={n_sites} dim={n_sites + 3} tmcmc={100 * run.tmcmc_rate:.4f}% "
            f"rwmh={100 * run.rwmh_rate:.4f}% ratio>={run.ratio:.1f}"
        )
    write_summary_csv(out / "summary.csv", rows)
    names = [f"{v}@{n}" for n, _ in traces for v in ("beta", "log_sigma2", "log_alpha")]
    write_trace_csv(out / "trace.csv", np.hstack([d for _, d in traces]), names, _trace_start(sched), sched.thin)
    write_acf_csv(out / "acf.csv", acfs)
    return lines


def summarize_named(chain, i, variable, method) -> SummaryRow:
    if chain.draws.shape[0] < 2:
        raise UsageError("need at least 2 stored draws; lengthen the run or reduce thinning")
    return summarize(chain, i, variable, method)


def run_bridge(args, out: Path) -> list[str]:
    sched = _schedule(args)
    res = experiments.run_bridge(
        sched, n_data=args.n_data, M=args.M, kappa=args.kappa, true_nu=args.true_nu,
        data_seed=args.data_seed, n_bins=args.bins,
    )
    draws = res.thetas[:, None]
    row = summarize(draws, 0, "nu", "BRIDGE-EXCHANGE", res.acceptance)
    write_summary_csv(out / "summary.csv", [row])
    write_trace_csv(out / "trace.csv", draws, ["nu"], _trace_start(sched), sched.thin)
    write_csv(out / "density.csv", ["nu", "exact", "histogram"], res.density)
    write_acf_csv(out / "acf.csv", {"nu": acf(res.thetas, min(ACF_LAGS, res.thetas.size - 1))})
    return [
        f"acceptance={100 * res.acceptance:.2f}% L1={res.l1:.4f} "
        f"eps_draws_per_iteration={int(res.eps_draws.max())} (n*M={args.n_data * args.M})"
    ]


def run_bounds(args, out: Path) -> list[str]:
    rows = experiments.run_bounds(args.c, args.K, args.k, args.dt, args.lam)
    write_csv(out / "summary.csv", BOUND_COLUMNS, ([r[c] for c in BOUND_COLUMNS] for r in rows))
    return [
        f"k={r['k']} rwmh={r['rwmh']:.6e} tmcmc={r['tmcmc']:.6g}"
        + (f" hmc={r['hmc']:.6g}" if r["hmc"] is not None else "")
        for r in rows
    ]


def run_discrete_check(args, out: Path) -> list[str]:
    res = experiments.run_discrete_check(J=args.J, theta=args.theta, r=args.r)
    rows = res.rows()
    write_csv(out / "summary.csv", ["check", "value"], rows)
    return [f"{k}={v}" for k, v in rows]


def run_gaussian_bench(args, out: Path) -> list[str]:
    sched = _schedule(args)
    res = experiments.run_gaussian_bench(args.dim, sched, hmc_step=args.dt, hmc_leaps=args.leaps)
    rows = res.rows()
    write_summary_csv(out / "summary.csv", rows)
    names = [f"{s}_x{i + 1}" for s in res.chains for i in range(args.dim)]
    draws = np.hstack([c.draws for c in res.chains.values()])
    write_trace_csv(out / "trace.csv", draws, names, _trace_start(sched), sched.thin)
    return [f"{s}: acceptance={100 * c.acceptance_rate:.2f}%" for s, c in res.chains.items()]


RUNNERS = {
    "challenger": run_challenger,
    "geo": run_geo,
    "bridge": run_bridge,
    "bounds": run_bounds,
    "discrete-check": run_discrete_check,
    "gaussian-bench": run_gaussian_bench,
}


# -- argument parsing ------------------------------------------------------------------


def _add_schedule(p, n, burn_in, thin, seed=2024):
    g = p.add_argument_group("schedule")
    g.add_argument("--n", type=int, default=n, help="total iterations")
    g.add_argument("--burn-in", type=int, default=burn_in)
    g.add_argument("--thin", type=int, default=thin)
    g.add_argument("--seed", type=int, default=seed)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tmcmc", description="Transformation-based MCMC benchmarks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="experiment", metavar="EXPERIMENT", parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./tmcmc-output/{name})")
        p.add_argument("--config", help="file of key=value lines used as defaults")
        return p

    p = add("challenger", "logit regression on the O-ring data")
    _add_schedule(p, 100_000, 20_000, 1)
    p.add_argument("--samplers", type=_name_list, default=list(experiments.CHALLENGER_SAMPLERS))
    p.add_argument("--scales", choices=("derived", "published"), default="derived",
                   help="TMCMC scales: MLE Cholesky column or the printed constants")
    p.add_argument("--mh-h", type=float, default=1.0, help="Gaussian MH proposal covariance is h^2 C")

    p = add("geo", "GP-Poisson geostatistics, TMCMC vs joint RWMH")
    _add_schedule(p, 50_000, 10_000, 10)
    p.add_argument("--n-sites", type=_int_list, default=[20, 50])
    p.add_argument("--factor", type=float, default=experiments.GEO_SCALE_FACTOR)
    p.add_argument("--data-seed", type=int, default=0)

    p = add("bridge", "bridge-exchange sampler on the circular model")
    _add_schedule(p, 55_000, 5_000, 1)
    p.add_argument("--n-data", type=int, default=20)
    p.add_argument("--M", type=int, default=100)
    p.add_argument("--kappa", type=float, default=0.5)
    p.add_argument("--true-nu", type=float, default=0.0)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=50)

    p = add("bounds", "displacement-probability bounds")
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--K", type=float, default=2.0)
    p.add_argument("--k", type=_int_list, default=[160])
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--lam", type=float, default=0.0)

    p = add("discrete-check", "exact-kernel checks for the discrete chains")
    p.add_argument("--J", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=0.5)
    p.add_argument("--r", type=float, default=0.5)

    p = add("gaussian-bench", "TMCMC, RWMH and HMC on a standard normal")
    _add_schedule(p, 20_000, 2_000, 1)
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--leaps", type=int, default=10)

    p = sub.add_parser("rerun", help="repeat a run from its manifest.json")
    p.add_argument("manifest")
    p.add_argument("--out")
    return parser


def read_config(path) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def parse_args(argv, parser=None) -> argparse.Namespace:
    parser = parser or build_parser()
    args = parser.parse_args(argv)
    if args.experiment is None:
        raise UsageError("missing experiment; choose from " + ", ".join([*RUNNERS, "rerun"]))
    if getattr(args, "config", None):
        try:
            overrides = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}")
        flags = []
        for key, value in overrides.items():
            flags += [f"--{key.replace('_', '-')}", value]
        # config values are defaults; flags on the command line win
        pos = argv.index(args.experiment) + 1
        sub_argv = [*argv[:pos], *flags, *argv[pos:]]
        args = parser.parse_args(sub_argv)
    return args


def _manifest(args) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("out", "config", "verbose", "experiment")}
    return {"experiment": args.experiment, "parameters": params, "seed": params.get("seed"), "version": __version__}


def _argv_from_manifest(manifest: dict) -> list[str]:
    argv = [manifest["experiment"]]
    for key, value in manifest["parameters"].items():
        if value is None:
            continue
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        argv += [f"--{key.replace('_', '-')}", str(value)]
    return argv


def _output_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    base = os.environ.get(OUTPUT_ENV)
    return Path(base) if base else Path("tmcmc-output") / args.experiment


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        if args.experiment == "rerun":
            try:
                manifest = json.loads(Path(args.manifest).read_text())
            except (OSError, ValueError) as exc:
                raise UsageError(f"cannot read manifest: {exc}")
            out_flag = ["--out", args.out] if args.out else []
            args = parse_args(_argv_from_manifest(manifest) + out_flag)
    except UsageError as exc:
        print(f"tmcmc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    out = _output_dir(args)
    try:
        out.mkdir(parents=True, exist_ok=True)
        lines = RUNNERS[args.experiment](args, out)
        with open(out / "manifest.json", "w", encoding="ascii") as fh:
            json.dump(_manifest(args), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except UsageError as exc:
        print(f"tmcmc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonFiniteError, FloatingPointError) as exc:
        print(f"tmcmc: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ChainError as exc:
        code = EXIT_NUMERIC if isinstance(exc.cause, (NonFiniteError, FloatingPointError)) else EXIT_RUNTIME
        print(f"tmcmc: chain failed at {exc}", file=sys.stderr)
        return code
    except ValueError as exc:
        print(f"tmcmc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, RuntimeError) as exc:
        print(f"tmcmc: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for line in lines:
        print(line)
    print(f"wrote {out}")
    return EXIT_OK


def _row_text(r: SummaryRow) -> str:
    q = " ".join(f"{v:.3f}" for v in r.quantiles)
    return f"{r.variable} {r.method}: acc={r.acceptance_pct:.2f}% mean={r.mean:.3f} sd={r.std:.3f} q=[{q}]"


if __name__ == "__main__":
    sys.exit(main())
