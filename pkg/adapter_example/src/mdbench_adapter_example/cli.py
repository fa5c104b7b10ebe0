"""Command-line front end: flag parsing plus the stdio serve loop."""
from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .server import MODES, AdapterConfig, serve_stdio


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdbench-adapter-example", description=__doc__
    )
    parser.add_argument("--mode", choices=MODES, default="echo")
    parser.add_argument("--model", default=None, help="neural: model identifier")
    parser.add_argument("--replay", default=None,
                        help="replay-file: transcript, one response per line")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-batch", type=int, default=8)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = AdapterConfig(
            mode=args.mode,
            model=args.model,
            replay=args.replay,
            device=args.device,
            max_batch=args.max_batch,
        )
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    return serve_stdio(config)


if __name__ == "__main__":
    sys.exit(main())
