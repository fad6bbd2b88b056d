"""Command-line interface for simulation, pricing and the experiment
harness.

Subcommands: ``simulate`` (dump a path set), ``price`` (one pricing cell),
``bench`` (full replication grid with CSV and figure output), ``rank``
(factorization-rank study across tolerances), ``converge`` (synthetic
sample-size study).  The output directory defaults to the ``CMEPRICER_OUT``
environment variable, then to ``results``; command-line flags override
config-file values.
"""

import argparse
import os
import sys
from dataclasses import replace

from . import bench as bench_mod
from .bench import DEFAULT_RANK_EPSILONS, ExperimentConfig, parse_config_file
from .errors import CmePricerError
from .market import HestonParams, monitoring_steps, save_paths, simulate_heston
from .pricing import (
    ContractSpec,
    backward_bound_report,
    fit_pricing_operator,
    implied_vol_put,
    price_american_cme,
    price_american_ls,
)

ENV_OUTPUT_DIR = "CMEPRICER_OUT"


def _float_list(text):
    return tuple(float(item) for item in text.split(",") if item.strip())


def _int_list(text):
    return tuple(int(item) for item in text.split(",") if item.strip())


def _add_heston_flags(parser):
    parser.add_argument("--s0", type=float, help="initial price")
    parser.add_argument("--v0", type=float, help="initial variance")
    parser.add_argument("--rate", type=float, help="risk-free rate")
    parser.add_argument("--kappa", type=float, help="variance mean-reversion speed")
    parser.add_argument("--theta", type=float, help="long-term variance")
    parser.add_argument("--xi", type=float, help="vol of vol")
    parser.add_argument("--rho", type=float, help="price/variance correlation")


def _heston_from_args(args, base=None):
    base = base if base is not None else HestonParams()
    overrides = {
        name: getattr(args, flag)
        for name, flag in (
            ("s0", "s0"),
            ("v0", "v0"),
            ("r", "rate"),
            ("kappa", "kappa"),
            ("theta", "theta"),
            ("xi", "xi"),
            ("rho", "rho"),
        )
        if getattr(args, flag, None) is not None
    }
    return replace(base, **overrides) if overrides else base


def _default_out(args_out, config_out=None):
    if args_out:
        return args_out
    env = os.environ.get(ENV_OUTPUT_DIR)
    if env:
        return env
    return config_out if config_out else "results"


def build_parser():
    parser = argparse.ArgumentParser(prog="cmepricer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate paths and dump them to a binary file")
    p.add_argument("--n", type=int, required=True, help="number of paths")
    p.add_argument("--maturity", type=float, required=True, help="maturity in years")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, help="override the monitoring-step rule")
    p.add_argument("--out", required=True, help="output file")
    _add_heston_flags(p)

    p = sub.add_parser("price", help="price one (n, maturity, strike) cell")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--strike", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--methods", type=lambda s: tuple(s.split(",")), default=("cme_lr", "ls"))
    p.add_argument("--bound-report", action="store_true", help="print the backward error-bound report")
    _add_heston_flags(p)

    p = sub.add_parser("bench", help="run the replication grid and emit CSVs and figures")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--n", type=_int_list, help="comma-separated path counts")
    p.add_argument("--maturity", type=_float_list, help="comma-separated maturities")
    p.add_argument("--strikes", type=int, help="number of strikes")
    p.add_argument("--reps", type=int, help="replications")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--methods", type=lambda s: tuple(s.split(",")))
    p.add_argument("--reference-paths", type=int)
    p.add_argument("--reference-csv", help="reference IVs (required when r != 0)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    _add_heston_flags(p)

    p = sub.add_parser("rank", help="factorization-rank study across tolerances")
    p.add_argument("--epsilons", type=_float_list, default=DEFAULT_RANK_EPSILONS)
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--n", type=_int_list)
    p.add_argument("--maturity", type=_float_list)
    p.add_argument("--reps", type=int)
    p.add_argument("--out")
    p.add_argument("--no-plots", action="store_true")
    _add_heston_flags(p)

    p = sub.add_parser("converge", help="synthetic linear-Gaussian convergence study")
    p.add_argument("--n-grid", type=_int_list, default=(250, 500, 1000, 2000, 4000))
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--out")
    p.add_argument("--no-plots", action="store_true")

    return parser


def _config_from_args(args):
    config = parse_config_file(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.n:
        overrides["n_grid"] = args.n
    if args.maturity:
        overrides["maturities"] = args.maturity
    if getattr(args, "strikes", None):
        overrides["moneyness_count"] = args.strikes
    if args.reps:
        overrides["replications"] = args.reps
    if getattr(args, "epsilon", None):
        overrides["epsilon"] = args.epsilon
    if getattr(args, "methods", None):
        overrides["methods"] = args.methods
    if getattr(args, "reference_paths", None):
        overrides["reference_paths"] = args.reference_paths
    heston = _heston_from_args(args, config.heston)
    if heston != config.heston:
        overrides["heston"] = heston
    overrides["output_dir"] = _default_out(args.out, config.output_dir)
    return replace(config, **overrides)


def cmd_simulate(args):
    params = _heston_from_args(args)
    paths = simulate_heston(params, args.n, args.maturity, args.seed, n_steps=args.steps)
    save_paths(paths, args.out)
    print(f"wrote {paths.n_paths} paths x {paths.n_steps} steps (dt = {paths.dt:.6f}) to {args.out}")
    return 0


def cmd_price(args):
    params = _heston_from_args(args)
    contract = ContractSpec(args.strike, args.maturity)
    paths = simulate_heston(params, args.n, args.maturity, args.seed)
    for method in args.methods:
        if method == "cme_lr":
            result = price_american_cme(paths, contract, rate=params.r, epsilon=args.epsilon)
        elif method == "ls":
            result = price_american_ls(paths, contract, rate=params.r)
        else:
            raise CmePricerError(f"unknown method {method!r}")
        try:
            iv = implied_vol_put(result.price, params.s0, args.strike, params.r, args.maturity)
            iv_text = f"{iv:.6f}"
        except CmePricerError:
            iv_text = "n/a"
        extra = ""
        if result.rank_x is not None:
            extra = f"  ranks = ({result.rank_x}, {result.rank_y})"
        print(
            f"{method:>7}: price = {result.price:.6f}  iv = {iv_text}  "
            f"time = {result.elapsed_micros} us{extra}"
        )
    if args.bound_report:
        op = fit_pricing_operator(paths, epsilon=args.epsilon)
        report = backward_bound_report(op, monitoring_steps(args.maturity))
        print(
            f"bound report: delta_lr = {report.delta_lr:.6e}, kappa_x = {report.kappa_x_empirical:.6e}, "
            f"low-rank part = {report.bound_lr_part:.6e}, statistical part: {report.statistical_part}"
        )
    return 0


def cmd_bench(args):
    config = _config_from_args(args)
    return bench_mod.run_bench(config, reference_csv=args.reference_csv, plots=not args.no_plots)


def cmd_rank(args):
    config = _config_from_args(args)
    return bench_mod.run_rank_study(config, epsilons=args.epsilons, plots=not args.no_plots)


def cmd_converge(args):
    out = _default_out(args.out)
    return bench_mod.run_convergence_study(
        n_grid=args.n_grid, replications=args.reps, output_dir=out, plots=not args.no_plots
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "price": cmd_price,
        "bench": cmd_bench,
        "rank": cmd_rank,
        "converge": cmd_converge,
    }
    try:
        return handlers[args.command](args)
    except CmePricerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
