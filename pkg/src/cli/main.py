"""Command-line entry point: argument parsing, configuration and the exit-code contract."""

import argparse
import sys
from pathlib import Path

import structlog

from src.cli.commands import COMMANDS
from src.core.config import load_run_config
from src.core.exceptions import AttackCircuitError
from src.utils.logging import bind_command_context, clear_command_context, setup_logging

logger = structlog.get_logger(__name__)

EXIT_OK = 0

COMMAND_HELP = {
    "extract": "Ingest feeds and write processed-CVE files per device",
    "build": "Build the attack circuit and write circuit.json",
    "score": "Build, solve and score; write the score report and table",
    "paths": "List ranked attack paths of the built circuit",
    "export": "Export the built circuit as DOT or JSON",
    "report": "Run extract, build, score, export and paths in one go",
}


def _common_arguments() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nvd", type=Path, nargs="+", action="extend", help="NVD JSON feeds")
    common.add_argument("--catalog", type=Path, help="Device catalog JSON")
    common.add_argument("--traffic", type=Path, help="Packet log CSV")
    common.add_argument("--blacklist", type=Path, help="IP blacklist, one address per line")
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--out", type=Path, help="Output directory")
    common.add_argument("--metric", choices=["impact", "exploitability", "risk"])
    common.add_argument("--format", choices=["dot", "json"])
    common.add_argument("-v", "--verbose", action="count", default=0, help="Debug logging")
    common.add_argument("--log-json", action="store_true", help="JSON log lines on stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attack-circuit",
        description="Score IoT networks with attack circuits built from CVE descriptions.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_arguments()
    for name, help_text in COMMAND_HELP.items():
        subparsers.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on data errors, 2 on usage or configuration errors
    """
    args = build_parser().parse_args(argv)

    setup_logging(level="DEBUG" if args.verbose else None, json=args.log_json or None)
    bind_command_context(args.command)
    try:
        config = load_run_config(
            args.config,
            overrides={
                "nvd": args.nvd,
                "catalog": args.catalog,
                "traffic": args.traffic,
                "blacklist": args.blacklist,
                "out": args.out,
                "metric": args.metric,
                "format": args.format,
                "verbosity": args.verbose or None,
            },
        )
        output = COMMANDS[args.command](config)
    except AttackCircuitError as e:
        logger.error("Command failed", error=str(e), exit_code=e.exit_code)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    finally:
        clear_command_context()

    sys.stdout.write(output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
