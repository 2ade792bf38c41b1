# src/cli.py
import argparse
import logging
import os
import sys
import time
from typing import Dict, List, Optional

from dotenv import load_dotenv

from src.errors import ConfigError, SteinPairsError
from src.experiments.config import REQUIRED_KEYS, THEOREM_KEYS, load_config, parse_config
from src.experiments.report import emit_report, write_table
from src.experiments.runner import PRESETS, run_experiment

load_dotenv()
logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DEFAULT_LOG_LEVEL = os.getenv("STEIN_PAIRS_LOG_LEVEL", "INFO")

EXIT_PASSED = 0
EXIT_ERROR = 1
EXIT_FAILED = 2


def _key_values(pairs: Optional[List[str]]) -> Dict[str, str]:
    values = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"Expected key=value, got '{pair}'", key=key.strip() or None)
        values[key.strip()] = value.strip()
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat key=value experiment file.")
    common.add_argument("--out", help="Report path; the report goes to stdout when omitted.")
    common.add_argument("--csv", help="Also write the tabular part of the report here.")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--log-level", default=DEFAULT_LOG_LEVEL)
    common.add_argument("--params", nargs="*", metavar="KEY=VALUE", help="Config values that win over the file.")

    parser = argparse.ArgumentParser(prog="stein-pairs", description="Exchangeable-pair normal approximation experiments.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, preset in PRESETS.items():
        cmd = sub.add_parser(name, parents=[common], help=preset.description)
        if name == "bound":
            cmd.add_argument("theorem", nargs="?", choices=sorted(THEOREM_KEYS))
        if name == "haar-check":
            cmd.add_argument("--query", action="append", help="Moment query such as 'O:u(1,1)u(1,1)@n=4'; repeatable.")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, object]:
    overrides: Dict[str, object] = _key_values(args.params)
    overrides["experiment"] = args.experiment
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if getattr(args, "theorem", None):
        overrides["theorem"] = args.theorem
    if getattr(args, "query", None):
        overrides["query"] = args.query
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format=LOG_FORMAT, stream=sys.stderr)

    started = time.perf_counter()
    try:
        overrides = _overrides(args)
        cfg = load_config(args.config, overrides) if args.config else parse_config("", overrides)
        report = run_experiment(cfg)
        if args.out:
            emit_report(report, args.out, csv_path=args.csv, wall_clock=time.perf_counter() - started)
        else:
            sys.stdout.write(report.to_json())
            if args.csv:
                write_table(report, args.csv)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        if e.key in REQUIRED_KEYS.get(args.experiment, []):
            logger.error(f"{args.experiment} needs: {', '.join(REQUIRED_KEYS[args.experiment])}")
        return EXIT_ERROR
    except (SteinPairsError, OSError) as e:
        logger.error(f"{args.experiment} failed: {e}")
        return EXIT_ERROR

    if not report.passed:
        failed = [name for name, ok in report.predicates.items() if not ok]
        logger.warning(f"Failed predicates: {', '.join(failed)}")
        return EXIT_FAILED
    return EXIT_PASSED


if __name__ == "__main__":
    sys.exit(main())
