#!/usr/bin/env python3
"""Generate a demo frame bundle (two boxes plus detections) on disk.

Usage: python scripts/make_demo_bundle.py [OUTDIR]
"""

import dataclasses
import sys
from pathlib import Path

from rgbdsize.bundle import save_bundle
from rgbdsize.camera import CameraIntrinsics
from rgbdsize.synth import BoxObject, SceneSpec, generate


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_bundle")
    intr = CameraIntrinsics(1280, 720, 900.0, 900.0, 640.0, 360.0, k1=0.02)
    spec = SceneSpec(
        intrinsics=intr,
        background_depth=1.3,
        objects=(
            BoxObject("carton", -0.22, 0.02, 0.25, 0.35, 0.55),
            BoxObject("crate", 0.30, 0.05, 0.42, 0.38, 0.85),
        ),
        sample_stride=10,
        dropout=0.05,
        noise_sigma=0.01,
        rng_seed=42,
    )
    bundle, truth = generate(spec)
    bundle = dataclasses.replace(
        bundle, detections=tuple(t.bounding_box(margin=15.0) for t in truth.objects)
    )
    save_bundle(bundle, out)
    print(f"wrote {out}/")
    for t in truth.objects:
        print(f"  {t.label}: true {t.height:.3f} m x {t.width:.3f} m at {t.depth} m")
    print(
        f"\ntry:  rgbdsize measure --bundle {out} --interp bilinear "
        f"--edge-thresh 0.15 --overlay {out}/overlay.ppm"
    )


if __name__ == "__main__":
    main()
