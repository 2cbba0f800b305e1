"""
The main module for BIoTBound
"""
# standard imports
import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, TextIO

# third party imports
import numpy as np
from loguru import logger

# project imports
from biotbound import __version__
from biotbound.commands.command import Row
from biotbound.commands.reproduce_command import SWEEP_CHOICES
from biotbound.config.config import Config
from biotbound.errors import BiotBoundError
from biotbound.executor.executor import Executor

BIOTBOUND_VERSION = f"BIoTBound {__version__}"
COMMANDS = ("crb", "maximize", "bound", "waterfill", "dsa", "simulate", "reproduce")
DEFAULT_FIXTURE = "baseline"


def format_cell(value: Any) -> str:
    """
    Formats a CSV cell; floats use the shortest representation that round-trips.
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(stream: TextIO, columns: List[str], rows: List[Row]):
    """
    Writes the header and the rows.
    """
    writer = csv.writer(stream)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(value) for value in row])


class BiotBound():
    """
    The BiotBound class runs one command on a config and writes its outputs.
    """
    def __init__(self, config: Config, source: str):
        self._config = config
        self._source = source
        self._executor = Executor(self._config)

    def manifest(self, command: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """
        Returns the run manifest; it is itself a valid config for a rerun.
        """
        return {
            "manifest": {
                "tool": "BIoTBound",
                "version": __version__,
                "command": command,
                "arguments": arguments,
                "source": self._source,
                "seed": self._config.get("seed", 0),
                "timestamp": datetime.now(timezone.utc).isoformat(),
            },
            "config": self._config.as_dict(),
        }

    def run(
        self,
        command: str,
        arguments: Dict[str, Any],
        out: Optional[str] = None,
        manifest_path: Optional[str] = None
    ):
        """
        Runs the command, then writes the CSV and the manifest. Nothing is written on failure.
        The manifest is written whatever the verbosity: to `manifest_path`, next to `out`,
        or to stderr for a CSV on stdout.
        """
        columns, rows = self._executor.execute(command, arguments)
        manifest = self.manifest(command, arguments)
        if out is None:
            write_csv(sys.stdout, columns, rows)
        else:
            with open(out, "w", encoding="utf-8", newline="") as file_fp:
                write_csv(file_fp, columns, rows)
            logger.info(f"{len(rows)} rows written to {out}")
        if manifest_path is None and out is not None:
            manifest_path = f"{out}.manifest.json"
        if manifest_path is None:
            sys.stderr.write(json.dumps(manifest) + "\n")
            return
        with open(manifest_path, "w", encoding="utf-8") as file_fp:
            json.dump(manifest, file_fp, indent=4)
        logger.info(f"Manifest written to {manifest_path}")


def load_config(args: argparse.Namespace) -> Config:
    """
    Loads the config file, or a shipped fixture, and applies the command line overrides.
    """
    if args.config is not None:
        config = Config()
        config.parse(args.config)
    else:
        config = Config.from_fixture(args.fixture)
    for key in ("seed", "threads", "cap"):
        value = getattr(args, key)
        if value is not None:
            config.set(key, value)
    return config


def build_parser() -> argparse.ArgumentParser:
    """
    Builds the command line parser.
    """
    parser = argparse.ArgumentParser(description=BIOTBOUND_VERSION)

    parser.add_argument(
        "--config",
        default=None,
        help="Scenario config (json), or a run manifest"
    )

    parser.add_argument(
        "--fixture",
        default=DEFAULT_FIXTURE,
        help="Shipped config used when --config is not given"
    )

    parser.add_argument("--seed", type=int, default=None, help="Random seed")
    parser.add_argument("--out", default=None, help="Output CSV file (stdout if not set)")
    parser.add_argument(
        "--manifest",
        default=None,
        help="Run manifest file (default: <out>.manifest.json, or stderr when writing to stdout)"
    )
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    parser.add_argument("--cap", type=int, default=None, help="Outcome-space cap")

    parser.add_argument(
        "--color",
        action="store_true",
        help="Colorize output"
    )

    parser.add_argument(
        "-v", "--verbose",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING"],
        help="Set verbosity level"
    )

    parser.add_argument(
        "--version",
        action="version",
        help="Show program's version number and exit",
        version=BIOTBOUND_VERSION
    )

    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        subparser = subparsers.add_parser(command)
        if command == "reproduce":
            subparser.add_argument("sweep", choices=SWEEP_CHOICES, help="Sweep to run")
    return parser


def main(argv: Optional[List[str]] = None):
    """
    The main function, which is the entry point of the program.
    """
    logger.remove()
    args = build_parser().parse_args(argv)

    if args.color:
        logger.add(sys.stderr, format="<lvl>{message}</lvl>", level=args.verbose)
    else:
        logger.add(sys.stderr, colorize=False, format="{message}", level=args.verbose)

    arguments = {"sweep": args.sweep} if args.command == "reproduce" else {}
    try:
        config = load_config(args)
        source = args.config if args.config is not None else f"fixture:{args.fixture}"
        BiotBound(config, source).run(args.command, arguments, args.out, args.manifest)
    except BiotBoundError as error:
        logger.error(f"Error: {error}")
        sys.exit(error.exit_code)
