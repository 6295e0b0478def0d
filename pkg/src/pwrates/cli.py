"""Command-line entry point: ``pwrates {run,rates,construct,plotdata}``.

Exit codes: 0 on success, 1 for configuration or usage errors, 2 for
failures while running.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load_config
from .constructive import BUILDERS, ConstructionError, build_by_kind
from .experiment import ExperimentError, emit_plotdata, run_experiment
from .piecewise import TargetError
from .rates import RateError, fourier_lower_bound, series_exponent, theoretical_rate
from .relu_net import TrainingError, save_network

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwrates", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment described by a TOML config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides the config)")

    rates = sub.add_parser("rates", help="print rate exponents")
    rates.add_argument("--beta", type=float, required=True)
    rates.add_argument("--alpha", type=float, required=True)
    rates.add_argument("--dim", type=int, required=True)
    rates.add_argument("--n", type=float, help="also print the series lower bound at this n")
    rates.add_argument("--sigma", type=float, default=0.5)

    con = sub.add_parser("construct", help="build an explicit ReLU construction")
    con.add_argument("--kind", choices=BUILDERS, required=True)
    con.add_argument("--eps", type=float, required=True)
    con.add_argument("--dim", type=int, default=3, help="input count for sum/product/inner")
    con.add_argument("--out", required=True, help="network JSON path")

    pd = sub.add_parser("plotdata", help="summarize a results directory for plotting")
    pd.add_argument("results_dir")
    pd.add_argument("--out", required=True)
    return p


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    reports = run_experiment(cfg, args.out)
    for r in reports:
        print(f"{r.method}\tslope={r.slope:.4f}\ttheory={r.theoretical_exponent:.4f}")
    return EXIT_OK


def _cmd_rates(args) -> int:
    out = {"theoretical_exponent": theoretical_rate(args.beta, args.alpha, args.dim),
           "series_exponent": series_exponent(args.dim)}
    if args.n is not None:
        out["fourier_lower_bound"] = fourier_lower_bound(args.n, args.dim, args.sigma)
    print(json.dumps(out))
    return EXIT_OK


def _cmd_construct(args) -> int:
    if not 0 < args.eps < 1:
        raise ConfigError("--eps must lie in (0, 1)")
    net, report = build_by_kind(args.kind, args.eps, args.dim)
    save_network(net, args.out)
    print(report.to_json())
    return EXIT_OK


def _cmd_plotdata(args) -> int:
    print(emit_plotdata(args.results_dir, args.out))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "rates": _cmd_rates, "construct": _cmd_construct,
               "plotdata": _cmd_plotdata}[args.command]
    try:
        return handler(args)
    except (ConfigError, TargetError, RateError, ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExperimentError, TrainingError, OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
