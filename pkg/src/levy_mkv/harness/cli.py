"""Command line interface.

    levy-mkv constants|contraction|chaos|moments|fidelity \
        --config run.toml [--seed n] [--out dir] [--workers k] [--check]

Exit codes: 0 success, 2 config error, 3 assumption (balance condition)
violation, 4 numerical blow-up, 5 acceptance-check failure under --check.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from ..dynamics import BlowUpError, ThinningError
from ..metrics import HHViolationError
from .config import ConfigError, load_config
from .experiments import (run_chaos, run_constants, run_contraction,
                          run_fidelity, run_moments, _human_table)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3
EXIT_BLOWUP = 4
EXIT_CHECK = 5

_COMMANDS = {
    "constants": run_constants,
    "contraction": run_contraction,
    "chaos": run_chaos,
    "moments": run_moments,
    "fidelity": run_fidelity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-mkv",
        description="Coupling experiments for Levy-driven McKean-Vlasov "
                    "Langevin dynamics")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes for replica loops")
        p.add_argument("--check", action="store_true",
                       help="exit 5 when any acceptance-style check fails")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed,
                          out_override=args.out, workers_override=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = os.path.join(cfg.out_dir, args.command)
    os.makedirs(out_dir, exist_ok=True)
    try:
        if args.command == "constants":
            record, checks = run_constants(cfg)
        else:
            record, checks = _COMMANDS[args.command](cfg, out_dir=out_dir)
    except HHViolationError as exc:
        print(f"assumption violation (balance condition): {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except (BlowUpError, ThinningError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    record.write(out_dir, formats=[f for f in cfg.formats if f in ("csv", "json")])
    if args.command == "constants":
        print(_human_table(record.extra["constants"]))
        if "warning" in record.extra:
            print(f"warning: {record.extra['warning']}", file=sys.stderr)
    for name, (ok, detail) in checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    if args.check and not all(ok for ok, _ in checks.values()):
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
