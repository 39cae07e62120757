import argparse
import logging

from commands.common import (
    add_cycle_arguments,
    add_output_arguments,
    finish,
    require,
    resolve_coin0,
    resolve_config,
    settings,
)
from services.export import write_sequence
from services.protocols import PROTOCOLS, RESET_MODES, run_cesaro_protocol, run_direct_protocol, run_reset_protocol
from services.rng import RandomSource

LOGGER = logging.getLogger(__name__)


def handle_sample(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    coin0 = resolve_coin0(args)
    require(args.samples >= 1, f"samples S must be >= 1 (got {args.samples})")
    rng = RandomSource(args.seed)

    if args.protocol == "reset":
        require(args.steps is not None, "reset protocol requires --steps/-m (m >= 1)")
        require(args.steps >= 1, f"steps m must be >= 1 (got {args.steps})")
        seq = run_reset_protocol(config, args.steps, coin0, args.samples, rng, x0=args.x0, reset=args.reset)
        steps = {"steps": args.steps, "reset": args.reset}
    else:
        require(args.t_max is not None, f"{args.protocol} protocol requires --t-max/-T")
        if args.protocol == "direct":
            require(args.t_max >= 1, f"t-max T must be >= 1 (got {args.t_max})")
            seq = run_direct_protocol(config, args.t_max, coin0, args.x0, args.samples, rng)
        else:
            require(args.t_max >= 0, f"t-max T must be >= 0 (got {args.t_max})")
            seq = run_cesaro_protocol(config, args.t_max, coin0, args.x0, args.samples, rng)
        steps = {"t_max": args.t_max}

    parameters = {
        "protocol": args.protocol,
        "nodes": config.nodes,
        "coin": args.coin,
        "coin0": coin0.to_floats(),
        "x0": args.x0,
        "samples": args.samples,
        "seed": args.seed,
        "format": args.format,
        **steps,
    }
    return finish(args, "sample", write_sequence(seq, args.format), parameters)


def setup(subparsers: argparse._SubParsersAction) -> None:
    defaults = settings()
    parser = subparsers.add_parser("sample", help="generate a sample sequence with one of the protocols")
    parser.add_argument("protocol", choices=PROTOCOLS)
    add_cycle_arguments(parser, defaults)
    parser.add_argument("--steps", "-m", type=int, default=None, help="walk steps m between measurements (reset)")
    parser.add_argument("--t-max", "-T", dest="t_max", type=int, default=None, help="timesteps T (direct, cesaro)")
    parser.add_argument("--samples", "-S", type=int, required=True)
    parser.add_argument("--seed", type=int, default=defaults["seed"])
    parser.add_argument(
        "--reset",
        choices=RESET_MODES,
        default="measured",
        help="reset protocol: restart at the measured vertex or at a uniformly drawn one",
    )
    add_output_arguments(parser, defaults)
    parser.set_defaults(handler=handle_sample)
