"""Command line: serve a model over HTTP or run batch prediction."""

from __future__ import annotations

import argparse
import sys

from .batch import batch_predict
from .config import SUPPORTED_MODELS, AdapterConfig
from .server import serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovd-adapter",
        description="Expose an open-vocabulary detector to the prompt engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model", required=True, choices=SUPPORTED_MODELS)
        p.add_argument("--dataset-root", default=".", help="base dir for image paths")
        p.add_argument("--device", default="cpu")
        p.add_argument("--score-floor", type=float, default=0.0)

    p = sub.add_parser("serve", help="run the HTTP service")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    p = sub.add_parser("batch", help="write a prediction cache file")
    common(p)
    p.add_argument("--gt", required=True, help="COCO-style annotation file")
    p.add_argument("--prompts", required=True, help="prompt list (.txt or .json)")
    p.add_argument("--out", required=True, help="output cache (JSON Lines)")

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = AdapterConfig(
        model=args.model,
        dataset_root=args.dataset_root,
        device=args.device,
        score_floor=args.score_floor,
    )
    if args.command == "serve":
        serve(config, host=args.host, port=args.port)
        return 0
    written = batch_predict(config, args.gt, args.prompts, args.out)
    print(f"{written} new lines written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
