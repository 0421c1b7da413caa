#!/usr/bin/env python
"""
Command-line entry point.

    uv run main.py --config scenarios/smoke.json --out out --jobs 4

Exit codes: 0 all checks pass, 1 a check failed, 2 bad configuration.
"""

import argparse
import logging
import os
import sys
import time

from dotenv import load_dotenv

from errors import ConfigError
from models import CHECK_NAMES
from report_io import summary_table
from scenario_runner import run

load_dotenv()

logger = logging.getLogger(__name__)


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Li-Yau estimate workbench for weighted elliptic equations")
    parser.add_argument("--config", required=True, help="Scenario file (JSON)")
    parser.add_argument("--out", default=None, help="Output directory (env WORKBENCH_OUT)")
    parser.add_argument("--jobs", type=int, default=None, help="Concurrent scenarios (env WORKBENCH_JOBS)")
    parser.add_argument("--grid", type=int, default=None, help="Grid cells N")
    parser.add_argument("--seed", type=int, default=None, help="Seed for sampling and initial guesses")
    parser.add_argument("--check", action="append", choices=CHECK_NAMES, help="Run only this check (repeatable)")
    return parser.parse_args(argv)


def overrides_from(args: argparse.Namespace) -> dict:
    """CLI flags over environment over file values"""
    env_jobs = os.getenv("WORKBENCH_JOBS")
    return {
        "out": args.out or os.getenv("WORKBENCH_OUT"),
        "jobs": args.jobs if args.jobs is not None else (int(env_jobs) if env_jobs else None),
        "grid": args.grid,
        "seed": args.seed,
    }


def main(argv=None) -> int:
    logging.basicConfig(
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=os.getenv("WORKBENCH_LOG_LEVEL", "INFO").upper(),
    )
    args = parse_args(argv)
    start = time.perf_counter()
    try:
        summaries = run(args.config, overrides_from(args), args.check)
    except (ConfigError, ValueError) as e:
        logger.error(f"Configuration error: {e}")
        print(f"config error: {e}", file=sys.stderr)
        return 2

    for summary in summaries:
        for check in summary.checks:
            print(check.summary_line())
    table = summary_table(summaries)
    failed = int((table["status"] == "FAIL").sum()) if len(table) else 0
    elapsed = time.perf_counter() - start
    logger.info(f"{len(summaries)} scenarios, {len(table)} checks, {failed} failed in {elapsed:.1f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
