"""Command-line entry point.

Usage examples::

    horizon-hedge run-all --config configs/fixture.yaml
    horizon-hedge diagnose --cash c.csv --futures f.csv --split-date 2003-03-17 --seed 1 --out out
    horizon-hedge simulate-fixture --out data --T 2601 --seed 7

Every analysis subcommand accepts either ``--config`` or the single-asset
flags; flags given alongside a config override it.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__, fixtures, garch
from .errors import ConfigError, HedgeError, PipelineError
from .pipeline import ALL_STAGES, config_from_dict, load_config, run

STAGES_FOR = {
    "diagnose": ("diagnose",),
    "estimate": ("estimate",),
    "scale": ("estimate", "scale"),
    "hedge": ("hedge",),
    "evaluate": ("evaluate",),
    "run-all": ALL_STAGES,
}


def _add_run_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML run configuration")
    p.add_argument("--cash", help="cash price CSV (single-asset mode)")
    p.add_argument("--futures", help="futures price CSV (single-asset mode)")
    p.add_argument("--label", default=None, help="asset label in single-asset mode")
    p.add_argument("--horizons", type=lambda s: [int(x) for x in s.split(",")],
                   help="comma-separated horizons, e.g. 1,5,20")
    p.add_argument("--split-date", dest="split_date")
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float, help="tail probability for VaR/CVaR")
    p.add_argument("--n-resamples", dest="n_resamples", type=int)
    p.add_argument("--kappa", type=float, help="override the kurtosis used for aggregation")
    p.add_argument("--refit-every", dest="refit_every", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", dest="output_dir", help="output directory")


def _config(args):
    overrides = {k: getattr(args, k) for k in
                 ("horizons", "split_date", "seed", "alpha", "n_resamples", "kappa",
                  "refit_every", "jobs", "output_dir")}
    single = None
    if args.cash or args.futures:
        if not (args.cash and args.futures):
            raise ConfigError("--cash and --futures must be given together")
        single = [{"label": args.label or "asset", "cash": args.cash, "futures": args.futures}]
    if args.config:
        cfg = load_config(args.config, overrides)
        if single:
            # explicit files replace the configured asset list; paths stay relative to cwd
            cfg.assets = config_from_dict({"assets": single, "split_date": cfg.split_date,
                                           "seed": cfg.seed}).assets
        return cfg
    if not single:
        raise ConfigError("give --config or both --cash and --futures")
    raw = {"assets": single, "split_date": args.split_date, "seed": args.seed}
    if args.split_date is None:
        raise ConfigError("--split-date is required without a config file")
    return config_from_dict(raw, overrides=overrides)


def _simulate(args) -> int:
    params = garch.VechGarchParams.from_vector(
        [float(x) for x in args.params.split(",")]) if args.params else fixtures.FTSE_LIKE
    cash, fut = fixtures.simulate_fixture(params, args.T, args.seed, args.out, args.prefix)
    print(f"wrote {cash}\nwrote {fut}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="horizon-hedge",
                                     description="Multi-horizon futures hedging pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "diagnose": "descriptive statistics and diagnostic tests",
        "estimate": "direct GARCH estimates at every horizon",
        "scale": "direct estimates beside aggregated (scaled) parameters",
        "hedge": "hedge-ratio statistics and paths",
        "evaluate": "in- and out-of-sample effectiveness with bootstrap tests",
        "run-all": "every stage",
    }
    for name, text in helps.items():
        _add_run_args(sub.add_parser(name, help=text))
    sim = sub.add_parser("simulate-fixture", help="write a simulated cash/futures price pair")
    sim.add_argument("--out", required=True)
    sim.add_argument("--T", type=int, default=2601)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--prefix", default="")
    sim.add_argument("--params", help="nine comma-separated values: omega,alpha,beta for s, sf, f")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate-fixture":
            return _simulate(args)
        cfg = _config(args)
        manifest = run(cfg, STAGES_FOR[args.command])
        for rel in manifest["files"]:
            print(cfg.output_dir / rel)
        print(cfg.output_dir / "manifest.json")
        return 0
    except ConfigError as exc:
        print(f"error: [stage=config] {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except HedgeError as exc:
        print(f"error: [stage={args.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
