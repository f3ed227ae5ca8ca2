import argparse
import logging
import sys
from typing import Callable, Dict, List, Optional, Sequence

from pydantic import ValidationError

from common.errors import RenormalizationError
from config import settings
from scripts.report import ReportRow, failures, render_csv, render_json, render_table
from scripts.run_config import COMMANDS, RunConfig, merge_config, read_config_file
from scripts.steps.anomaly_step import run_anomaly
from scripts.steps.area_step import run_renorm_area
from scripts.steps.fg_expand_step import run_fg_expand
from scripts.steps.identities_step import run_identities
from scripts.steps.volume_step import run_renorm_volume

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

STEPS: Dict[str, Callable[[RunConfig], List[ReportRow]]] = {
    "fg-expand": run_fg_expand,
    "renorm-volume": run_renorm_volume,
    "renorm-area": run_renorm_area,
    "anomaly": run_anomaly,
    "identities": run_identities,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="renorm",
        description="Renormalized volumes, areas and anomalies of Poincare-Einstein model metrics.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=str, help="key = value file; flags take precedence")
    parser.add_argument("--model", type=str)
    parser.add_argument("--n", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--upsilon", type=str, help="e.g. '0.1*cos(x1)'")
    parser.add_argument("--angle", type=float, help="boundary angle for geodesic, latitude and torus models")
    parser.add_argument("--grid", type=int, help="quadrature nodes per axis")
    parser.add_argument("--eps-lo", dest="eps_lo", type=float)
    parser.add_argument("--eps-hi", dest="eps_hi", type=float)
    parser.add_argument("--eps-count", dest="eps_count", type=int)
    parser.add_argument("--order", type=int)
    parser.add_argument("--format", choices=("table", "csv", "json"))
    parser.add_argument("--out", type=str)
    parser.add_argument("--tol", type=float)
    return parser


def _emit(config: RunConfig, rows: Sequence[ReportRow]):
    if config.format == "csv":
        text = render_csv(rows)
    elif config.format == "json":
        text = render_json(rows)
    else:
        text = render_table(rows, title=config.command)
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"Report written to {config.out}")
    else:
        sys.stdout.write(text)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = vars(parser.parse_args(argv))
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS

    config_path = args.pop("config")
    try:
        file_values = read_config_file(config_path) if config_path else None
        config = merge_config(args, file_values)
    except (ValidationError, ValueError, OSError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"renorm: error: {exc}\n")
        return EXIT_USAGE

    try:
        rows = STEPS[config.command](config)
    except (RenormalizationError, ArithmeticError, ValueError, RuntimeError) as exc:
        # options are already validated; step errors are numerical failures
        logger.error(f"{config.command} failed: {type(exc).__name__}: {exc}")
        sys.stderr.write(f"renorm: {config.command} failed: {exc}\n")
        return EXIT_FAIL

    _emit(config, rows)
    failed = failures(rows)
    if failed:
        sys.stderr.write(render_table(failed, title="failed checks"))
        return EXIT_FAIL
    logger.info(f"{config.command}: all {len(rows)} checks passed")
    return EXIT_PASS


def main():
    logging.basicConfig(
        level=settings.LOG_LEVEL, format="%(asctime)s - %(levelname)s - %(message)s"
    )
    sys.exit(run())


if __name__ == "__main__":
    main()
