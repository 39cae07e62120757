"""Browse the run registry and replay stored manifests."""

import argparse
import json
import logging
from typing import List, Optional

from commands.common import require
from services import db
from services.export import FORMATS, Document, Table, emit, read_manifest, write_document

LOGGER = logging.getLogger(__name__)


def handle_history(args: argparse.Namespace) -> int:
    require(db.registry_enabled(), "run registry is disabled (QWALK_DISABLE_REGISTRY is set)")
    if args.show is not None:
        run = db.get_run(args.show)
        require(run is not None, f"no run with id {args.show}")
        emit(json.dumps(run, indent=2, sort_keys=True) + "\n", None)
        return 0

    require(args.limit >= 1, f"limit must be >= 1 (got {args.limit})")
    runs = db.recent_runs(args.limit)
    rows = [
        [run["id"], run["command"], run["created_at"], run["output_path"] or "-", run["output_sha256"]]
        for run in runs
    ]
    doc = Document(
        meta={"command": "history", "total": db.count_runs()},
        tables=[Table("runs", ["id", "command", "created_at", "output", "sha256"], rows)],
    )
    emit(write_document(doc, args.format), None)
    return 0


def replay_argv(argv: List[str], out: Optional[str]) -> List[str]:
    """Return ``argv`` with its --out target replaced (or dropped when ``out`` is None)."""
    result: List[str] = []
    skip = False
    for token in argv:
        if skip:
            skip = False
            continue
        if token == "--out":
            skip = True
            continue
        if token.startswith("--out="):
            continue
        result.append(token)
    if out:
        result += ["--out", out]
    return result


def handle_replay(args: argparse.Namespace) -> int:
    manifest = read_manifest(args.manifest)
    require(bool(manifest.argv), f"manifest {args.manifest} has no recorded argv")
    require(manifest.argv[0] != "replay", "refusing to replay a replay manifest")
    argv = replay_argv(manifest.argv, args.out)
    LOGGER.info("Replaying '%s' run from %s", manifest.command, args.manifest)

    from qwalk import main

    return main(argv)


def setup(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("history", help="list runs stored in the registry")
    parser.add_argument("--limit", type=int, default=10)
    parser.add_argument("--show", type=int, default=None, metavar="ID", help="print one stored run as JSON")
    parser.add_argument("--format", choices=FORMATS, default="csv")
    parser.set_defaults(handler=handle_history)

    parser = subparsers.add_parser("replay", help="re-run the command recorded in a manifest sidecar")
    parser.add_argument("manifest", help="path to a <output>.manifest.json file")
    parser.add_argument("--out", default=None, help="new output file (default stdout)")
    parser.set_defaults(handler=handle_replay)
