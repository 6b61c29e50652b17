"""Command-line entry point for the reconciliation experiments.

Exit codes: 0 success, 2 configuration error, 3 infeasible operating
point, 4 at least one sweep point hit its timeout.
"""

import argparse
import sys

from . import harness
from .channel import ChannelError
from .ldpc import LdpcError
from .outer import OuterError
from .security import SecurityError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_TIMEOUT = 4


def _grid(text):
    return tuple(float(p) for p in text.replace(",", " ").split())


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sbrec",
        description="Two-step reconciliation experiments for CV-QKD.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in harness.EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output CSV path (default stdout)")
        p.add_argument("--workers", type=int)
        p.add_argument("--beta-grid", type=_grid,
                       help="comma-separated efficiency grid")
        p.add_argument("--distance-grid", type=_grid,
                       help="comma-separated distances in km")
        p.add_argument("--blocklength", type=int)
        p.add_argument("--dim", type=int, choices=(1, 2, 4, 8))
        p.add_argument("--n-crc", type=int)
        p.add_argument("--r-out", type=float)
        p.add_argument("--n-out", type=int)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {
        "experiment": args.experiment,
        "master_seed": args.seed,
        "workers": args.workers,
        "beta_grid": args.beta_grid,
        "distance_grid": args.distance_grid,
        "blocklength": args.blocklength,
        "dim": args.dim,
        "n_crc": args.n_crc,
        "r_out": args.r_out,
        "n_out": args.n_out,
    }
    try:
        cfg = harness.make_config(args.config, **overrides)
    except (harness.ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = harness.run_experiment(cfg)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ChannelError, SecurityError, LdpcError, OuterError) as exc:
        print(f"infeasible operating point: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    if args.out:
        harness.emit_csv(rows, args.out)
    else:
        harness.emit_csv(rows, "/dev/stdout")
    timed_out = any(row.get("timeout") for row in rows)
    return EXIT_TIMEOUT if timed_out else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
