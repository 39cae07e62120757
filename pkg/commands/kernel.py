import argparse
import logging

import numpy as np

from commands.common import (
    add_cycle_arguments,
    add_epsilon_argument,
    add_output_arguments,
    finish,
    require,
    resolve_coin0,
    resolve_config,
    settings,
)
from services import __version__
from services.analysis import (
    check_ergodicity,
    ds_entropy_bound,
    fourier_coefficients,
    halving_steps,
    shannon_entropy,
    spectral_contraction,
    tv_to_uniform,
)
from services.export import Document, Table, write_document
from services.protocols import iter_convolution_powers, transition_kernel

LOGGER = logging.getLogger(__name__)


def handle_kernel(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    coin0 = resolve_coin0(args)
    require(args.steps >= 1, f"steps m must be >= 1 (got {args.steps})")
    require(args.ds_max >= 1, f"ds-max must be >= 1 (got {args.ds_max})")

    kernel = transition_kernel(config, args.steps, coin0)
    spectrum = fourier_coefficients(kernel.mu)
    verdict = check_ergodicity(kernel.mu, args.epsilon)

    curve = []
    profile = []
    for n, power in enumerate(iter_convolution_powers(kernel.mu, args.ds_max), start=1):
        tv = tv_to_uniform(power)
        profile.append(tv)
        curve.append([n, ds_entropy_bound(spectrum, n), shannon_entropy(power), tv])

    weights = kernel.mu.weights
    asymmetry = float(np.max(np.abs(weights[1:] - weights[1:][::-1])))
    doc = Document(
        meta={
            "command": "kernel",
            "version": __version__,
            "nodes": config.nodes,
            "steps": args.steps,
            "coin": args.coin,
            "coin0": coin0.to_floats(),
            "epsilon": args.epsilon,
            "ergodic": verdict.ergodic,
            "witness": verdict.to_dict()["witness"],
            "entropy": shannon_entropy(kernel.mu),
            "tv_to_uniform": tv_to_uniform(kernel.mu),
            "spectral_contraction": spectral_contraction(spectrum),
            "max_asymmetry": asymmetry,
            "halving_steps": halving_steps(profile),
        },
        tables=[
            Table("kernel", ["x", "mu"], [[x, float(w)] for x, w in enumerate(weights)]),
            Table(
                "fourier",
                ["k", "re", "im", "abs"],
                [[k, float(c.real), float(c.imag), float(abs(c))] for k, c in enumerate(spectrum.coefficients)],
            ),
            Table("ds_bound", ["n", "bound", "entropy", "tv_to_uniform"], curve),
        ],
    )
    LOGGER.info(
        "Kernel N=%d m=%d: ergodic=%s witness=%s", config.nodes, args.steps, verdict.ergodic, verdict.witness
    )
    parameters = {
        "nodes": config.nodes,
        "steps": args.steps,
        "coin": args.coin,
        "coin0": coin0.to_floats(),
        "epsilon": args.epsilon,
        "ds_max": args.ds_max,
        "format": args.format,
    }
    return finish(args, "kernel", write_document(doc, args.format), parameters)


def setup(subparsers: argparse._SubParsersAction) -> None:
    defaults = settings()
    parser = subparsers.add_parser("kernel", help="transition kernel, Fourier spectrum, ergodicity and entropy bound")
    add_cycle_arguments(parser, defaults, with_x0=False)
    parser.add_argument("--steps", "-m", type=int, required=True, help="walk steps m")
    parser.add_argument("--ds-max", dest="ds_max", type=int, default=defaults["ds_max"], help="bound curve length")
    add_epsilon_argument(parser, defaults)
    add_output_arguments(parser, defaults)
    parser.set_defaults(handler=handle_kernel)
