import argparse
import logging
from typing import Any, Dict, List

import numpy as np

from commands.common import add_epsilon_argument, add_output_arguments, finish, settings
from services import __version__
from services.analysis import (
    chi_square_uniformity,
    empirical_distribution,
    lag_joint,
    mutual_information,
    shannon_entropy,
    transition_chi_square,
    tv_to_uniform,
)
from services.export import Document, Table, read_sequence, write_document
from services.protocols import transition_kernel
from services.utils import parse_int_list
from services.walk import CoinState, CycleConfig, coin_from_name

LOGGER = logging.getLogger(__name__)


def handle_analyze(args: argparse.Namespace) -> int:
    with open(args.input, "r", encoding="utf-8") as f:
        seq = read_sequence(f.read())
    nodes = seq.nodes
    lags = parse_int_list(args.lags, "lags") if args.lags else list(settings()["lags"])
    LOGGER.info("Analyzing %d samples on N=%d from %s", len(seq), nodes, args.input)

    empirical = empirical_distribution(seq)
    counts = np.bincount(seq.values, minlength=nodes)
    meta: Dict[str, Any] = {
        "command": "analyze",
        "version": __version__,
        "input": args.input,
        "source": seq.meta.to_dict(),
        "length": len(seq),
        "entropy": shannon_entropy(empirical),
        "tv_to_uniform": tv_to_uniform(empirical),
    }
    if len(seq) >= 5 * nodes:
        chi = chi_square_uniformity(seq)
        meta["chi_square"] = chi.statistic
        meta["chi_square_dof"] = chi.dof
    else:
        LOGGER.warning("Sequence shorter than 5N = %d; skipping chi-square", 5 * nodes)

    tables: List[Table] = [
        Table(
            "empirical",
            ["x", "count", "frequency"],
            [[x, int(c), float(w)] for x, (c, w) in enumerate(zip(counts, empirical.weights))],
        )
    ]
    information = []
    for lag in lags:
        joint = lag_joint(seq, lag)
        information.append([lag, mutual_information(joint)])
        columns = ["a"] + [str(b) for b in range(nodes)]
        tables.append(Table(f"lag_{lag}", columns, [[a] + [int(c) for c in row] for a, row in enumerate(joint.counts)]))
    tables.append(Table("mutual_information", ["lag", "bits"], information))

    if args.mu_steps is not None:
        coin_name = args.coin or seq.meta.coin
        config = CycleConfig(nodes=nodes, coin=coin_from_name(coin_name))
        kernel = transition_kernel(config, args.mu_steps, CoinState.from_floats(seq.meta.coin0))
        test = transition_chi_square(seq, kernel.mu, args.epsilon)
        meta["transition_chi_square"] = test.statistic
        meta["transition_dof"] = test.dof
        meta["transition_outside_support"] = test.outside_support

    parameters = {
        "input": args.input,
        "lags": lags,
        "mu_steps": args.mu_steps,
        "coin": args.coin,
        "epsilon": args.epsilon,
        "format": args.format,
    }
    return finish(args, "analyze", write_document(Document(meta=meta, tables=tables), args.format), parameters)


def setup(subparsers: argparse._SubParsersAction) -> None:
    defaults = settings()
    parser = subparsers.add_parser("analyze", help="entropy, uniformity and lag statistics of a stored sequence")
    parser.add_argument("input", help="sequence file written by 'sample' (CSV or JSON)")
    parser.add_argument("--lags", default=None, help="comma separated lags (default from coins.json settings)")
    parser.add_argument("--mu-steps", dest="mu_steps", type=int, default=None, help="test lag-1 transitions against mu for m steps")
    parser.add_argument("--coin", default=None, help="coin for --mu-steps (default: the coin recorded in the sequence)")
    add_epsilon_argument(parser, defaults)
    add_output_arguments(parser, defaults, default_format="json")
    parser.set_defaults(handler=handle_analyze)
