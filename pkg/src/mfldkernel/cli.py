"""Command line entry point.

Exit codes: 0 success, 1 failed checks, 2 config error, 3 divergence, 4 I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import checks
from .config import RunConfig, from_dict, get_preset, read_config_file
from .errors import ConfigError, DivergenceError, SnapshotFormatError
from .harness import run_experiment
from .plots import emit_plots

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 1, 2, 3, 4

SUBCOMMAND_MODES = {"train": "mfld", "train-ln": "label_noise", "baseline": "frozen"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfldkernel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, mode in SUBCOMMAND_MODES.items():
        p = sub.add_parser(name, help=f"run in {mode} mode")
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--preset", help="named preset (overridden by --config keys)")
        p.add_argument("--seed", type=int, help="base seed override")
        p.add_argument("--out", help="output directory")
    sub.add_parser("check", help="run the oracle and identity self-checks")
    p = sub.add_parser("plot", help="render SVG charts from a metrics CSV")
    p.add_argument("csv")
    p.add_argument("--out", default="figures")
    return parser


def resolve_config(args, mode: str) -> RunConfig:
    cfg = get_preset(args.preset) if args.preset else RunConfig()
    if args.config:
        cfg = from_dict({**cfg.to_dict(), **read_config_file(args.config)})
    changes = {"mode": mode}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out:
        changes["output"] = args.out
    return cfg.replace(**changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        if args.command == "check":
            results = checks.run_all()
            for r in results:
                status = "PASS" if r.passed else "FAIL"
                print(f"{status}  {r.name}: worst={r.worst:.3e} tol={r.tolerance:.1e}")
            return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK
        if args.command == "plot":
            try:
                written = emit_plots(args.csv, args.out)
            except (ValueError, KeyError) as exc:
                print(f"malformed metrics file: {exc}", file=sys.stderr)
                return EXIT_IO
            for path, labels in written.items():
                print(f"{path}: {', '.join(labels)}")
            return EXIT_OK
        cfg = resolve_config(args, SUBCOMMAND_MODES[args.command])
        summary = run_experiment(cfg)
        for avg in summary["seed_averages"]:
            print(f"{avg['mode']} sigma={avg['sigma']:g} tilde_sigma={avg['tilde_sigma']:g} "
                  f"test_mse={avg['test_mse']:.4g} dof={avg['dof']:.4g} align_emp={avg['align_emp']:.4g}")
        print(f"wrote {summary['csv']}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (OSError, SnapshotFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
