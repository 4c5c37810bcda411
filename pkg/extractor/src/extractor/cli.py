"""Command-line entry point: extract activations and write FCPG files."""

from __future__ import annotations

import argparse
import os
import sys

from .extract import ExtractionSpec, extract
from .report import report_to_json, verify_against_reference
from .taps import ARCHITECTURES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Dump post-ReLU CNN activations after each major block",
    )
    parser.add_argument("--arch", default="resnet18", choices=sorted(ARCHITECTURES))
    parser.add_argument(
        "--dataset",
        default="synthetic",
        help="'synthetic' or an image-folder root containing <split>/ subdirectories",
    )
    parser.add_argument("--split", default="val")
    parser.add_argument("--out", default="features", help="output directory")
    parser.add_argument("--weights", default="pretrained", choices=("pretrained", "random"))
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--num-images", type=int, default=None)
    parser.add_argument("--stride", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--skip-report", action="store_true",
        help="do not write the informational nonzero-vs-reference report",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = ExtractionSpec(
        arch=args.arch,
        dataset=args.dataset,
        split=args.split,
        out_dir=args.out,
        weights=args.weights,
        batch_size=args.batch_size,
        device=args.device,
        num_images=args.num_images,
        stride=args.stride,
        seed=args.seed,
    )
    try:
        paths = extract(spec)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    if not args.skip_report and args.arch == "resnet18":
        report = verify_against_reference(paths)
        report_path = os.path.join(args.out, "nonzero_report.json")
        with open(report_path, "w") as fh:
            fh.write(report_to_json(report))
        print(report_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
