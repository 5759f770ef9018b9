"""
Command-line interface: generate, ingest, train, evaluate and sweep.

Every command writes the resolved configuration to <out>/config.json next to
its outputs. Exit codes: 0 success, 1 configuration error, 2 input/output
error, 3 internal invariant violation.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from app import __version__
from app.config.settings import RunConfig
from app.core.exceptions import (
    ConfigurationError,
    GenomeError,
    ObjectiveError,
    SimulationError,
    TraceFormatError,
    TrainingError,
)
from app.core.logger import setup_logging
from app.cli import dependencies
from app.utils.data_processor import DataProcessor

logger = logging.getLogger("connection_router")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_INTERNAL = 3


def _csv_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {e}") from e


def _csv_names(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


class RouterArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors surface as configuration errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise ConfigurationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = RouterArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--parallelism", type=int, help="Worker processes")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--log-file", help="Also log to this file")

    parser = RouterArgumentParser(
        prog="connection-router",
        description="Bi-objective connection routing: simulate, train and evaluate load-balancing policies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="Write a synthetic workload CSV")

    ingest = sub.add_parser("ingest", parents=[common], help="Load a CSV trace into the workload format")
    ingest.add_argument("--trace", required=True, help="CSV trace file")
    ingest.add_argument("--mapping", help="Column mapping JSON (workload CSV layout if omitted)")
    ingest.add_argument("--sample", type=int, help="Pick this many requests at random")
    ingest.add_argument("--disturb", type=int, default=0, help="Number of disturbed copies to write")

    sub.add_parser("train", parents=[common], help="Evolve routing policies")

    evaluate = sub.add_parser("evaluate", parents=[common], help="Evaluate a policy on repeated scenarios")
    evaluate.add_argument("--policy", help="Heuristic name, neural:<genome-file> or front:<train-dir>")
    evaluate.add_argument("--n-seeds", type=int, help="Number of scenarios")

    sweep = sub.add_parser("sweep", parents=[common], help="Evaluate policies across an axis")
    sweep.add_argument("--axis", required=True, choices=["load", "servers", "sigma"])
    sweep.add_argument("--values", required=True, type=_csv_floats, help="Comma-separated axis values")
    sweep.add_argument("--policies", type=_csv_names, help="Comma-separated policy specifications")
    sweep.add_argument("--n-seeds", type=int, help="Number of scenarios per value")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    return dependencies.get_config(
        args.config,
        seed=args.seed,
        out_dir=args.out,
        parallelism=args.parallelism,
        policy=getattr(args, "policy", None),
        policies=getattr(args, "policies", None),
        n_seeds=getattr(args, "n_seeds", None),
    )


def _write_snapshot(config: RunConfig, command: str) -> None:
    snapshot = config.snapshot()
    snapshot["command"] = command
    DataProcessor.save_json(snapshot, str(Path(config.out_dir) / "config.json"))


def cmd_generate(args: argparse.Namespace, config: RunConfig) -> int:
    summary = dependencies.get_workload_service(config).generate(config.out_dir)
    logger.info(f"Wrote {summary.requests} requests to {summary.files[0]}")
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace, config: RunConfig) -> int:
    summary = dependencies.get_workload_service(config).ingest(
        args.trace, args.mapping, config.out_dir, sample=args.sample, disturb=args.disturb
    )
    logger.info(f"Ingested {summary.requests} requests into {len(summary.files)} files")
    return EXIT_OK


def cmd_train(args: argparse.Namespace, config: RunConfig) -> int:
    summary = dependencies.get_training_service(config).train(config.out_dir)
    DataProcessor.save_json(summary, str(Path(config.out_dir) / "training_summary.json"))
    logger.info(
        f"Final front: {len(summary.front)} policies, hypervolume "
        f"{summary.hypervolume_initial:.6g} -> {summary.hypervolume_final:.6g}"
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace, config: RunConfig) -> int:
    dependencies.get_evaluation_service(config).evaluate(config.out_dir)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    report = dependencies.get_sweep_service(config).sweep(args.axis, args.values, config.out_dir)
    logger.info(f"Sweep wrote {report.rows} rows to {report.csv_file}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
}


def exit_code_for(error: BaseException) -> int:
    """Map an exception raised by a command to the process exit code."""
    if isinstance(error, (TraceFormatError, GenomeError, OSError)):
        return EXIT_IO
    if isinstance(error, TrainingError):
        return EXIT_IO if isinstance(error.__cause__, OSError) else EXIT_CONFIG
    if isinstance(error, ConfigurationError):
        return EXIT_CONFIG
    return EXIT_INTERNAL


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, resolve configuration and run one command.

    Args:
        argv: Arguments without the program name (sys.argv[1:] if None)

    Returns:
        int: Process exit code
    """
    try:
        args = build_parser().parse_args(argv)
    except ConfigurationError as e:
        setup_logging(os.getenv("LOG_LEVEL", "INFO"))
        logger.error(f"Invalid arguments: {e}")
        return EXIT_CONFIG
    setup_logging(args.log_level or os.getenv("LOG_LEVEL", "INFO"), args.log_file)
    try:
        config = resolve_config(args)
        if args.log_level:
            config = config.with_overrides(log_level=args.log_level.upper())
        setup_logging(config.log_level, args.log_file)
        logger.info(f"Running '{args.command}' (seed={config.seed}, out={config.out_dir})")
        _write_snapshot(config, args.command)
        code = COMMANDS[args.command](args, config)
        logger.info(f"'{args.command}' finished")
        return code
    except (ConfigurationError, TraceFormatError, GenomeError, TrainingError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return exit_code_for(e)
    except (SimulationError, ObjectiveError) as e:
        logger.error(f"Internal invariant violated: {e}")
        return EXIT_INTERNAL
    except Exception as e:
        logger.exception(f"Unexpected error: {e}")
        return EXIT_INTERNAL
