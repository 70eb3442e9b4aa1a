#!/usr/bin/env python3
"""Tree vs linear-scan densification timings across image sizes.

Prints per-size wall times and the speedup ratio. The linear scan at
full HD takes tens of seconds; pass --quick to stop at 960x540.
"""

import sys
import time

from rgbdsize.camera import CameraIntrinsics, compose, interpolate_pose, relative_pose
from rgbdsize.densify import project_cloud
from rgbdsize.pipeline import run_bench
from rgbdsize.synth import BoxObject, SceneSpec, generate

SIZES = [(480, 270), (960, 540), (1920, 1080)]


def sparse_for(width: int, height: int):
    fx = width * 1005.0 / 1920.0
    intr = CameraIntrinsics(width, height, fx, fx, width / 2.0, height / 2.0)
    spec = SceneSpec(
        intrinsics=intr,
        background_depth=1.3,
        objects=(BoxObject("box", 0.0, 0.0, 0.20, 0.30, 0.5),),
        sample_stride=10,
        rng_seed=1,
    )
    bundle, _ = generate(spec)
    pose_rgb = interpolate_pose(bundle.trajectory, bundle.t_rgb)
    pose_depth = interpolate_pose(bundle.trajectory, bundle.t_depth)
    align = compose(bundle.depth_to_color, relative_pose(pose_rgb, pose_depth))
    return project_cloud(bundle.cloud, align, intr)


def main() -> None:
    sizes = SIZES[:-1] if "--quick" in sys.argv else SIZES
    run_bench(sparse_for(192, 108))  # compile kernels off the clock
    print(f"{'size':>12} {'points':>8} {'tree':>10} {'linear':>12} {'speedup':>9}")
    for w, h in sizes:
        sparse = sparse_for(w, h)
        t0 = time.perf_counter()
        bench = run_bench(sparse)
        total = time.perf_counter() - t0
        assert bench["outputs_identical"]
        print(
            f"{w}x{h:>5} {len(sparse):>8} {bench['tree_ms']:>8.0f}ms "
            f"{bench['linear_ms']:>10.0f}ms {bench['speedup']:>8.1f}x"
            f"   ({total:.1f}s total)"
        )


if __name__ == "__main__":
    main()
