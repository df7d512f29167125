"""Command-line entry point of the benchmark harness.

    ba-gmres-bench --gen tridiag --n 100 --methods no-pre,rpcg-pre
    ba-gmres-bench --matrix bcspwr02.mtx --methods no-pre,ADI-pre --out results/

Tables go to standard output, diagnostics and a one-line run summary to
standard error. With --out, per-method report summaries are also written to
<matrix>-reports.json. Exit status is 0 when the batch ran (failed solves
included) and 2 on configuration errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from app.bench import ExperimentConfig, MatrixSource, emit_table, prepare, run_problem, write_outputs
from core.errors import SolverError
from core.settings import (
    DEFAULT_ADI_ALPHA,
    DEFAULT_ETA,
    DEFAULT_INNER_MAX,
    DEFAULT_MAXIT,
    DEFAULT_TOL,
    LOG_LEVEL,
)
from krylov.report import SolveConfig
from memory.store import ReportStore

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ba-gmres-bench",
        description="Compare GMRES and BA-GMRES with inner-iteration preconditioners.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--matrix", metavar="PATH", help="Matrix Market file")
    source.add_argument("--gen", choices=["tridiag", "random"], help="generated test matrix")
    parser.add_argument("--n", type=int, default=100, help="order of the generated matrix")
    parser.add_argument("--seed", type=int, default=0, help="seed of the generated matrix and random rhs")

    parser.add_argument("--methods", default="no-pre", help="comma-separated method labels")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL)
    parser.add_argument("--maxit", type=int, default=DEFAULT_MAXIT)
    parser.add_argument("--alpha", type=float, default=DEFAULT_ADI_ALPHA, help="ADI shift")
    parser.add_argument("--delta", type=float, default=0.5, help="adaptive Kaczmarz step parameter")
    parser.add_argument("--eta", type=float, default=DEFAULT_ETA, help="inner residual factor")
    parser.add_argument("--inner-max", type=int, default=DEFAULT_INNER_MAX, help="inner depth cap")
    parser.add_argument("--block-size", type=int, default=4, help="Kaczmarz block size")
    parser.add_argument("--split", type=int, default=None, help="RPCG leading block order")
    parser.add_argument("--depth-mode", choices=["fixed", "flexible"], default="fixed")

    parser.add_argument("--rhs", choices=["ones", "random"], default="ones")
    parser.add_argument("--rhs-file", metavar="PATH", help="read b from a text file")

    parser.add_argument("--out", metavar="DIR", help="write histories and the table here")
    parser.add_argument("--format", choices=["markdown", "csv"], default="markdown")
    parser.add_argument("--no-timing", action="store_true", help="omit the time row")
    parser.add_argument("--verbose", "-v", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if args.matrix is not None:
        source = MatrixSource(path=args.matrix)
    else:
        source = MatrixSource(generator=args.gen, n=args.n, seed=args.seed)
    methods = [label.strip() for label in args.methods.split(",") if label.strip()]
    return ExperimentConfig(
        matrix=source,
        methods=methods,
        rhs_mode="file" if args.rhs_file else args.rhs,
        rhs_seed=args.seed,
        rhs_path=args.rhs_file,
        solve=SolveConfig(
            tol=args.tol,
            maxit=args.maxit,
            inner_max=args.inner_max,
            eta=args.eta,
            depth_mode=args.depth_mode,
        ),
        adi_alpha=args.alpha,
        delta=args.delta,
        block_size=args.block_size,
        split=args.split,
        kaczmarz_seed=args.seed,
        output=args.out,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        config = config_from_args(args)
        problem = prepare(config)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValidationError, SolverError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG

    store = ReportStore()
    reports = run_problem(problem, config, store)
    include_time = not args.no_timing
    sys.stdout.write(emit_table(reports, args.format, include_time))
    print(store.get_summary(), file=sys.stderr)
    if config.output:
        write_outputs(problem.name, reports, config.output, args.format, include_time)
        summary_path = Path(config.output) / f"{problem.name}-reports.json"
        summary_path.write_text(json.dumps(store.export(problem.name), indent=2))
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
