import argparse
import logging

from commands.common import add_cycle_arguments, add_output_arguments, finish, require, resolve_coin0, resolve_config, settings
from services import __version__
from services.analysis import total_variation, tv_to_uniform
from services.errors import UnsupportedConfigurationError
from services.export import Document, Table, write_document
from services.spectral import (
    CESARO_CONVENTIONS,
    cesaro_average,
    decompose,
    eigenphases,
    limiting_correction_closed_form,
    limiting_distribution,
)
from services.walk import localized_state

LOGGER = logging.getLogger(__name__)


def handle_spectrum(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    coin0 = resolve_coin0(args)
    x0 = config.check_vertex(args.x0)
    initial = localized_state(config, x0, coin0)
    decomp = decompose(config)
    generic = limiting_distribution(decomp, initial)

    meta = {
        "command": "spectrum",
        "version": __version__,
        "nodes": config.nodes,
        "coin": args.coin,
        "coin0": coin0.to_floats(),
        "x0": x0,
        "eigenvalue_classes": len(decomp.eigenvalue_groups),
        "degenerate_classes": sum(1 for group in decomp.eigenvalue_groups if len(group) > 1),
        "tv_generic_to_uniform": tv_to_uniform(generic),
    }
    columns = ["v", "pi_generic"]
    columns_data = [generic.weights]

    closed = None
    try:
        closed = limiting_correction_closed_form(config, coin0, x0)
    except UnsupportedConfigurationError as exc:
        if args.closed_form:
            raise
        LOGGER.debug("Skipping closed form: %s", exc)
    if closed is not None:
        columns.append("pi_closed")
        columns_data.append(closed.weights)
        meta["tv_closed_to_generic"] = total_variation(closed, generic)

    if args.cesaro_t is not None:
        require(args.cesaro_t >= 1, f"cesaro-T must be >= 1 (got {args.cesaro_t})")
        cesaro = cesaro_average(config, initial, args.cesaro_t, args.convention)
        columns.append("cesaro")
        columns_data.append(cesaro.weights)
        meta["cesaro_T"] = args.cesaro_t
        meta["convention"] = args.convention
        meta["tv_cesaro_to_generic"] = total_variation(cesaro, generic)

    limiting_rows = [[v] + [float(col[v]) for col in columns_data] for v in range(config.nodes)]
    tables = [
        Table("eigenphases", ["k", "theta_plus", "theta_minus"], [list(row) for row in eigenphases(decomp)]),
        Table(
            "groups",
            ["group", "n", "phase"],
            [
                [i, int(n), float(decomp.phases[n])]
                for i, group in enumerate(decomp.eigenvalue_groups)
                for n in group
            ],
        ),
        Table("limiting", columns, limiting_rows),
    ]
    LOGGER.info(
        "Spectrum N=%d: %d eigenvalue classes, TV(pi, uniform) = %.3e",
        config.nodes,
        meta["eigenvalue_classes"],
        meta["tv_generic_to_uniform"],
    )

    parameters = {
        "nodes": config.nodes,
        "coin": args.coin,
        "coin0": coin0.to_floats(),
        "x0": x0,
        "closed_form": args.closed_form,
        "cesaro_t": args.cesaro_t,
        "convention": args.convention,
        "format": args.format,
    }
    return finish(args, "spectrum", write_document(Document(meta=meta, tables=tables), args.format), parameters)


def setup(subparsers: argparse._SubParsersAction) -> None:
    defaults = settings()
    parser = subparsers.add_parser("spectrum", help="eigenphases, eigenvalue classes and the limiting distribution")
    add_cycle_arguments(parser, defaults)
    parser.add_argument(
        "--closed-form",
        dest="closed_form",
        action="store_true",
        help="require the closed-form limiting distribution (odd N, symmetric coin)",
    )
    parser.add_argument("--cesaro-T", dest="cesaro_t", type=int, default=None, help="also report the Cesaro average at this T")
    parser.add_argument("--convention", choices=CESARO_CONVENTIONS, default=defaults["cesaro_convention"])
    add_output_arguments(parser, defaults)
    parser.set_defaults(handler=handle_spectrum)
