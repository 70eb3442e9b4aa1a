"""Command line interface.

    rgbdsize measure --bundle DIR [--interp nn|bilinear]
                     [--edge-thresh METERS] [--percentiles LO,HI]
                     [--out report.json] [--overlay out.ppm] [--bench]

Exit codes: 0 success, 1 bundle error, 2 bad flags.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bundle import BundleError, load_bundle, write_ppm
from .pipeline import PipelineConfig, render_overlay, report_json, run_pipeline


def _percentiles(text: str) -> tuple[float, float]:
    try:
        lo_s, hi_s = text.split(",")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected LO,HI (e.g. 0.01,0.99), got {text!r}"
        ) from None
    if not (0.0 <= lo < hi <= 1.0):
        raise argparse.ArgumentTypeError(f"need 0 <= LO < HI <= 1, got {text!r}")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgbdsize",
        description="Measure object dimensions from an RGB + sparse depth capture.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    m = sub.add_parser("measure", help="run the measurement pipeline on a frame bundle")
    m.add_argument("--bundle", required=True, help="bundle directory")
    m.add_argument("--interp", choices=("nn", "bilinear"), default="bilinear",
                   help="densification method (default: bilinear)")
    m.add_argument("--edge-thresh", type=float, default=None, metavar="METERS",
                   help="discard interpolation neighbors whose depth deviates "
                        "this much from the neighbor median")
    m.add_argument("--percentiles", type=_percentiles, default=(0.01, 0.99),
                   metavar="LO,HI", help="extent percentiles (default: 0.01,0.99)")
    m.add_argument("--out", default=None, metavar="FILE",
                   help="write the report JSON here instead of stdout")
    m.add_argument("--overlay", default=None, metavar="FILE",
                   help="write an annotated PPM overlay here")
    m.add_argument("--bench", action="store_true",
                   help="also time linear-scan densification and report the speedup")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.edge_thresh is not None and args.edge_thresh <= 0:
        build_parser().error("--edge-thresh must be positive")  # exits 2

    try:
        bundle = load_bundle(args.bundle)
    except BundleError as e:
        print(f"rgbdsize: error: {e}", file=sys.stderr)
        return 1

    cfg = PipelineConfig(
        interp="nearest" if args.interp == "nn" else "bilinear",
        edge_threshold=args.edge_thresh,
        percentiles=args.percentiles,
        bench=args.bench,
    )
    report = run_pipeline(bundle, cfg)
    text = report_json(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.overlay:
        write_ppm(args.overlay, render_overlay(bundle, report))
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
