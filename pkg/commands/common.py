"""Flags, parameter resolution and output handling shared by all subcommands."""

import argparse
import logging
from typing import Any, Dict, Optional

from sqlalchemy.exc import SQLAlchemyError

from services import db
from services.errors import ValidationError
from services.export import FORMATS, RunManifest, digest, emit
from services.utils import load_settings
from services.walk import CoinState, CycleConfig, coin_from_name

LOGGER = logging.getLogger(__name__)


def add_cycle_arguments(parser: argparse.ArgumentParser, settings: Dict[str, Any], with_x0: bool = True) -> None:
    parser.add_argument("--nodes", "-N", type=int, required=True, help="number of cycle vertices N (>= 3)")
    parser.add_argument(
        "--coin",
        default=settings["coin"],
        help="coin preset from coins.json (symmetric, hadamard, ...) or custom:<8 floats>",
    )
    parser.add_argument(
        "--coin0",
        nargs=4,
        type=float,
        metavar=("RE_UP", "IM_UP", "RE_DOWN", "IM_DOWN"),
        default=None,
        help="initial coin state (default (|up> + |down>)/sqrt(2))",
    )
    if with_x0:
        parser.add_argument("--x0", type=int, default=0, help="initial vertex (default 0)")


def add_output_arguments(parser: argparse.ArgumentParser, settings: Dict[str, Any], default_format: Optional[str] = None) -> None:
    parser.add_argument("--format", choices=FORMATS, default=default_format or settings["format"])
    parser.add_argument("--out", default=None, help="output file (default stdout); a .manifest.json sidecar is written next to it")


def add_epsilon_argument(parser: argparse.ArgumentParser, settings: Dict[str, Any]) -> None:
    parser.add_argument(
        "--epsilon", type=float, default=settings["epsilon"], help="support threshold for ergodicity (default %(default)s)"
    )


def resolve_config(args: argparse.Namespace) -> CycleConfig:
    return CycleConfig(nodes=args.nodes, coin=coin_from_name(args.coin))


def resolve_coin0(args: argparse.Namespace) -> CoinState:
    if args.coin0 is None:
        return CoinState.balanced()
    return CoinState.from_floats(args.coin0)


def require(condition: bool, message: str) -> None:
    if not condition:
        raise ValidationError(message)


def finish(args: argparse.Namespace, command: str, text: str, parameters: Dict[str, Any]) -> int:
    """Emit the rendered output and record the run."""
    manifest = RunManifest(command=command, parameters=parameters, argv=list(getattr(args, "argv", [])))
    path = emit(text, args.out, manifest)
    if db.registry_enabled():
        try:
            stored = db.record_run(command, manifest.to_dict(), str(path) if path else None, digest(text))
            LOGGER.info("Recorded run %s (%s)", stored["id"], command)
        except SQLAlchemyError as exc:
            LOGGER.warning("Could not record run in registry: %s", exc)
    return 0


def settings() -> Dict[str, Any]:
    return load_settings()
