import argparse
import logging

import numpy as np

from commands.common import add_cycle_arguments, add_output_arguments, finish, require, resolve_coin0, resolve_config, settings
from services import __version__
from services.analysis import SCAN_MODES, best_timestep, entropy_scan
from services.export import Document, Table, write_document
from services.spectral import CESARO_CONVENTIONS

LOGGER = logging.getLogger(__name__)


def handle_scan(args: argparse.Namespace) -> int:
    require(args.t_max >= 1, f"t-max T must be >= 1 (got {args.t_max})")
    config = resolve_config(args)
    coin0 = resolve_coin0(args)
    modes = SCAN_MODES if args.mode == "both" else (args.mode,)

    meta = {
        "command": "scan",
        "version": __version__,
        "nodes": config.nodes,
        "coin": args.coin,
        "coin0": coin0.to_floats(),
        "x0": args.x0,
        "t_max": args.t_max,
        "convention": args.convention,
        "max_entropy": float(np.log2(config.nodes)),
    }
    tables = []
    for mode in modes:
        scan = entropy_scan(config, coin0, args.x0, args.t_max, mode, args.convention)
        best_t, best_h = best_timestep(scan)
        meta[f"{mode}_best_T"] = best_t
        meta[f"{mode}_best_entropy"] = best_h
        meta[f"{mode}_final_entropy"] = scan[-1][1]
        tables.append(Table(mode, ["T", "entropy"], [[t, h] for t, h in scan]))
        LOGGER.info("Scan %s: max entropy %.6f bits at T=%d (log2 N = %.6f)", mode, best_h, best_t, meta["max_entropy"])

    parameters = {
        "nodes": config.nodes,
        "coin": args.coin,
        "coin0": coin0.to_floats(),
        "x0": args.x0,
        "t_max": args.t_max,
        "mode": args.mode,
        "convention": args.convention,
        "format": args.format,
    }
    return finish(args, "scan", write_document(Document(meta=meta, tables=tables), args.format), parameters)


def setup(subparsers: argparse._SubParsersAction) -> None:
    defaults = settings()
    parser = subparsers.add_parser("scan", help="Shannon entropy of the direct or Cesaro distribution versus T")
    add_cycle_arguments(parser, defaults)
    parser.add_argument("--t-max", "-T", dest="t_max", type=int, required=True)
    parser.add_argument("--mode", choices=SCAN_MODES + ("both",), default="both")
    parser.add_argument("--convention", choices=CESARO_CONVENTIONS, default=defaults["cesaro_convention"])
    add_output_arguments(parser, defaults)
    parser.set_defaults(handler=handle_scan)
