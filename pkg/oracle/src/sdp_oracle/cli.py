"""Oracle entry point: solve a shared config through the SDPs and emit the
result file consumed by the main solver's crosscheck command."""

from __future__ import annotations

import argparse
import sys

from .errors import Infeasible, IoError, OracleError, ParseError, ValidationError
from .io import emit_result, load_config
from .solver import VARIANTS, solve_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oracle",
        description="SDP reference solver; reads the solver's JSON config and "
                    "writes a result file bound to it by hash.")
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", required=True, help="result JSON path")
    parser.add_argument("--variant", required=True, choices=VARIANTS)
    parser.add_argument("--force", action="store_true",
                        help="overwrite an existing result file")
    parser.add_argument("--solver-name", default=None,
                        help="conic solver override (default: Clarabel, else SCS)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.config)
        result = solve_config(raw, args.variant, solver=args.solver_name)
        emit_result(result, args.out, force=args.force)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (Infeasible, IoError, OracleError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
