import argparse
import importlib
import logging
import os
import sys
from typing import List, Optional

from sqlalchemy.exc import SQLAlchemyError

from services import __version__, db
from services.errors import ValidationError
from services.utils import load_environment

logging.basicConfig(
    level=os.getenv("LOG_LEVEL", "INFO"),
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    stream=sys.stderr,
)
LOGGER = logging.getLogger("qwalk")

EXTENSIONS = (
    "commands.sample",
    "commands.kernel",
    "commands.analyze",
    "commands.scan",
    "commands.spectrum",
    "commands.history",
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qwalk",
        description="Discrete-time quantum walks on cycles as sources of random samples.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for extension in EXTENSIONS:
        importlib.import_module(extension).setup(subparsers)
    LOGGER.debug("Loaded %d command extensions", len(EXTENSIONS))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    load_environment()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv

    if db.registry_enabled():
        try:
            db.init_db()
        except SQLAlchemyError as exc:
            LOGGER.warning("Run registry unavailable, continuing without it: %s", exc)

    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, SQLAlchemyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
