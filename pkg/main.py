"""
quakelab command line
- surface: Fenchel-Nielsen coordinates to genus-2 holonomy, with diagnostics
- verify-lemma: randomized certificate suite for the earthquake length estimate
- ukmap / project / duality: u_K convergence, current projection, de Sitter duality
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError as PydanticValidationError

from quakelab.cli.commands import COMMANDS
from quakelab.core.config import RunConfig, settings
from quakelab.core.errors import exit_code_for

logger = logging.getLogger("quakelab")


def setup_logging(level: str, log_file: Optional[str]) -> None:
    formatter = logging.Formatter(
        "%(asctime)s.%(msecs)03d [%(levelname)s] %(name)s: %(message)s", datefmt="%H:%M:%S"
    )
    logger.handlers.clear()
    # stderr only; stdout carries the run summary
    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)
    logger.addHandler(stream_handler)
    if log_file:
        file_handler = logging.FileHandler(log_file, mode="a")
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    logger.setLevel(level.upper())


def _grid(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quakelab", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="run config JSON (schema_version 1)")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--out")
        cmd.add_argument("--slack", type=float)
        cmd.add_argument("--budget-radius", type=int, dest="budget_radius")
        cmd.add_argument("--grid", type=_grid, help="comma separated t values")
        cmd.add_argument("--workers", type=int)
        cmd.add_argument("--log-level", default=settings.LOG_LEVEL, dest="log_level")
        cmd.add_argument("--log-file", default=settings.LOG_FILE, dest="log_file")
        if name == "verify-lemma":
            cmd.add_argument("--wrong-sign", action="store_true", dest="wrong_sign",
                             help="negative control: expect slope -i(l, gamma)")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Config file first, then command-line overrides; validated as a whole."""
    raw = RunConfig.load(args.config).model_dump()
    raw["command"] = args.command
    for key in ("seed", "out", "slack", "budget_radius", "grid", "workers"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    if getattr(args, "wrong_sign", False):
        raw["suite"]["wrong_sign"] = True
    return RunConfig.model_validate(raw)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file)
    try:
        config = load_config(args)
    except PydanticValidationError as exc:
        logger.error(f"invalid config: {exc.errors()[0]['msg']}")
        return 2
    except (OSError, ValueError) as exc:
        logger.error(f"cannot read config: {exc}")
        return 2

    logger.info(f"{config.command}: seed={config.seed} out={config.out}")
    try:
        return COMMANDS[config.command](config)
    except Exception as exc:
        code = exit_code_for(exc)
        logger.error(f"{config.command} failed (exit {code}): {exc}")
        logger.debug("traceback", exc_info=True)
        return code


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("interrupted")
        sys.exit(130)
    finally:
        logging.shutdown()
