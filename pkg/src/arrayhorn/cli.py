"""Command-line entry point.

Exit codes: 0 the program is safe, 1 unsafe (unsatisfiable clause
system), 2 inconclusive (budget, timeout, or solver unknown), 3 usage or
input errors.
"""

from __future__ import annotations

import argparse
import sys

from .chc import ChcError
from .driver import RunConfig, run
from .minilang import MiniLangError
from .smtproc import SolverConfig, SolverTransportError
from .sexpr import SExprError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arrayhorn",
        description="Safety verification of array programs by Horn clause "
                    "solving with learned quantified invariants.")
    parser.add_argument("--input", required=True, help="program or clause file")
    parser.add_argument("--format", choices=["mini", "chc"], default="mini",
                        help="input kind: mini language source or CHC file")
    parser.add_argument("--solver-cmd", default=None,
                        help="solver command line (default: bundled z3 shim)")
    parser.add_argument("--solver-timeout", type=float, default=60.0,
                        help="per-query solver timeout in seconds")
    parser.add_argument("--max-n", type=int, default=4,
                        help="largest quantifier count per array")
    parser.add_argument("--max-const", type=int, default=32,
                        help="largest attribute constant bound")
    parser.add_argument("--max-iterations", type=int, default=200)
    parser.add_argument("--max-size-bound", type=int, default=4,
                        help="largest bounded array length in the teacher's search")
    parser.add_argument("--min-array-len", type=int, choices=[0, 1], default=1,
                        help="smallest array length the teacher considers")
    parser.add_argument("--timeout", type=float, default=600.0,
                        help="global timeout in seconds")
    parser.add_argument("--export-smtlib", metavar="PATH", default=None,
                        help="write the system in SMT-LIB HORN form")
    parser.add_argument("--report", metavar="PATH", default=None,
                        help="write the machine-readable report (JSON)")
    parser.add_argument("--trace", metavar="PATH", default=None,
                        help="write the loop trace log")
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    solver = SolverConfig(
        timeout=args.solver_timeout,
        max_size_bound=args.max_size_bound,
        min_array_len=args.min_array_len)
    if args.solver_cmd:
        solver.command = args.solver_cmd.split()
        solver.uses_ready_marker = any("z3repl" in p for p in solver.command)
    config = RunConfig(
        input_path=args.input,
        input_kind=args.format,
        solver=solver,
        max_quantifiers=args.max_n,
        max_constant=args.max_const,
        max_iterations=args.max_iterations,
        global_timeout=args.timeout,
        report_path=args.report,
        trace_path=args.trace,
        export_path=args.export_smtlib)
    try:
        report = run(config, trace=None if args.quiet else _print_trace)
    except (MiniLangError, ChcError, SExprError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (SolverTransportError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    sys.stdout.write(report.render_text())
    return report.exit_code()


def _print_trace(line: str) -> None:
    print(f"[arrayhorn] {line}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
