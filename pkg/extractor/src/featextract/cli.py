"""Command line: featextract extract --images DIR --manifest m.jsonl
--out f.featmat --weights w.pth [--backbone densenet121] [--no-hist-eq]
[--batch 32]
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ExtractError
from .featfile import read_manifest
from .model import extract_features, load_backbone
from .preprocess import PreprocessConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featextract",
        description="Extract penultimate-layer CNN features from an image "
                    "folder into a feature-matrix file.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract")
    p.add_argument("--images", required=True, help="image directory")
    p.add_argument("--manifest", required=True, help="JSON-lines manifest")
    p.add_argument("--out", required=True, help="output .featmat path")
    p.add_argument("--weights", required=True, help="local state-dict file")
    p.add_argument("--backbone", choices=["densenet121", "resnet50"],
                   default="densenet121")
    p.add_argument("--no-hist-eq", action="store_true")
    p.add_argument("--batch", type=int, default=32)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        model = load_backbone(args.backbone, args.weights)
        rows = read_manifest(args.manifest)
        cfg = PreprocessConfig(hist_eq=not args.no_hist_eq)
        ids, skipped = extract_features(args.images, rows, args.out, model,
                                        cfg, batch_size=args.batch)
    except ExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    print(f"wrote {len(ids)} rows to {args.out}"
          + (f", skipped {len(skipped)}" if skipped else ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
