"""End-to-end pipeline: align -> project -> densify -> segment -> measure.

The report carries one measurement or one error per object, stage
timings in milliseconds, and a configuration echo. Serialization
truncates floats to 9 significant digits and is deterministic apart
from the timing (and optional benchmark) blocks.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bundle import FrameBundle
from .camera import compose, interpolate_pose, relative_pose
from .densify import (
    DensifyConfig,
    EmptySparseCloud,
    MetricImage,
    densify,
    densify_nearest,
    densify_nearest_linear,
    project_cloud,
)
from .measure import (
    Measurement,
    MeasurementFailure,
    measure_regions,
    segment_regions,
)
from .segment import SegmentMask

OVERLAY_PALETTE = (
    (255, 64, 64),
    (64, 128, 255),
    (64, 224, 96),
    (255, 200, 48),
    (192, 96, 255),
    (48, 224, 224),
)


@dataclass(frozen=True)
class PipelineConfig:
    interp: str = "bilinear"  # "nearest" or "bilinear"
    edge_threshold: Optional[float] = None
    max_radius: Optional[float] = None
    percentiles: tuple[float, float] = (0.01, 0.99)
    bench: bool = False

    def __post_init__(self):
        if self.interp not in ("nearest", "bilinear"):
            raise ValueError(f"unknown interp {self.interp!r}")
        lo, hi = self.percentiles
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"percentiles must satisfy 0 <= lo < hi <= 1, got {self.percentiles}")


@dataclass
class Report:
    measurements: list[Measurement]
    errors: list[MeasurementFailure]
    timings_ms: dict[str, float]
    config: dict
    dropped_points: dict[str, int]
    bench: Optional[dict] = None
    # (object_index, mask) per measurement plus the densified image; kept
    # for overlay rendering and diagnostics, not serialized
    masks: list[tuple[int, SegmentMask]] = field(default_factory=list)
    metric_image: Optional[MetricImage] = None

    def to_dict(self) -> dict:
        d = {
            "config": self.config,
            "dropped_points": self.dropped_points,
            "measurements": [
                {
                    "label": m.label,
                    "height": m.height,
                    "width": m.width,
                    "mean_depth": m.mean_depth,
                    "pixel_count": m.pixel_count,
                    "extent_percentiles": list(m.extent_percentiles),
                }
                for m in self.measurements
            ],
            "errors": [
                {"label": e.label, "error": e.error, "detail": e.detail}
                for e in self.errors
            ],
            "timings_ms": self.timings_ms,
        }
        if self.bench is not None:
            d["bench"] = self.bench
        return d


def _round9(obj):
    """Clamp every float to 9 significant digits, recursively."""
    if isinstance(obj, float):
        return float(f"{obj:.9g}")
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    return obj


def report_json(report: Report) -> str:
    return json.dumps(_round9(report.to_dict()), indent=2)


def run_pipeline(bundle: FrameBundle, cfg: PipelineConfig = PipelineConfig()) -> Report:
    """Run the full measurement pipeline over one frame bundle.

    Scheme 1 (full-frame clustering) when the bundle has no detections,
    scheme 2 (per-box clustering) otherwise. Per-object failures land in
    the report instead of raising.
    """
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    pose_rgb = interpolate_pose(bundle.trajectory, bundle.t_rgb)
    pose_depth = interpolate_pose(bundle.trajectory, bundle.t_depth)
    align = compose(bundle.depth_to_color, relative_pose(pose_rgb, pose_depth))
    sparse = project_cloud(bundle.cloud, align, bundle.intrinsics)
    timings["project"] = (time.perf_counter() - t0) * 1e3

    dcfg = DensifyConfig(
        method=cfg.interp,
        edge_threshold=cfg.edge_threshold,
        max_radius=cfg.max_radius,
    )
    config_echo = {
        "interp": cfg.interp,
        "edge_threshold": cfg.edge_threshold,
        "max_radius": cfg.max_radius,
        "percentiles": list(cfg.percentiles),
        "scheme": 2 if bundle.detections else 1,
    }
    dropped = {
        "cloud_rows_nonpositive": bundle.dropped_rows,
        "behind_camera": sparse.dropped_behind,
        "out_of_frame": sparse.dropped_outside,
    }

    t0 = time.perf_counter()
    try:
        metric = densify(sparse, dcfg)
    except EmptySparseCloud as e:
        timings["densify"] = (time.perf_counter() - t0) * 1e3
        timings["segment"] = 0.0
        timings["measure"] = 0.0
        return Report(
            measurements=[],
            errors=[MeasurementFailure("frame", type(e).__name__, str(e))],
            timings_ms=timings,
            config=config_echo,
            dropped_points=dropped,
        )
    timings["densify"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    regions = segment_regions(metric, bundle.detections)
    timings["segment"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    measurements, failures, masks = measure_regions(metric, regions, cfg.percentiles)
    timings["measure"] = (time.perf_counter() - t0) * 1e3

    bench = None
    if cfg.bench:
        bench = run_bench(sparse, max_radius=cfg.max_radius)

    return Report(
        measurements=measurements,
        errors=failures,
        timings_ms=timings,
        config=config_echo,
        dropped_points=dropped,
        bench=bench,
        masks=masks,
        metric_image=metric,
    )


def run_bench(sparse, max_radius: Optional[float] = None) -> dict:
    """Time tree-backed vs exhaustive nearest-neighbor densification.

    Both fills share the deduplication and tie-break rules, so their
    outputs must be identical; the benchmark asserts that too.
    """
    ncfg = DensifyConfig(method="nearest", max_radius=max_radius)
    t0 = time.perf_counter()
    tree_img = densify_nearest(sparse, ncfg)
    tree_ms = (time.perf_counter() - t0) * 1e3
    t0 = time.perf_counter()
    linear_img = densify_nearest_linear(sparse, ncfg)
    linear_ms = (time.perf_counter() - t0) * 1e3
    return {
        "tree_ms": tree_ms,
        "linear_ms": linear_ms,
        "speedup": linear_ms / tree_ms,
        "outputs_identical": bool(np.array_equal(tree_img.data, linear_img.data)),
    }


def render_overlay(
    bundle: FrameBundle,
    report: Report,
    masks: Optional[list[tuple[int, SegmentMask]]] = None,
) -> np.ndarray:
    """RGB copy with foreground masks tinted and detection boxes outlined.

    Colors come from a fixed palette keyed on object index, so output is
    deterministic. Labels are not drawn; dimensions live in the report.
    """
    out = bundle.rgb.astype(np.uint16).copy()
    if masks is None:
        masks = report.masks
    for obj_idx, mask in masks:
        color = np.array(OVERLAY_PALETTE[obj_idx % len(OVERLAY_PALETTE)], dtype=np.uint16)
        rows, cols = mask.frame_indices()
        out[rows, cols] = (out[rows, cols] + color) // 2
    H, W = out.shape[:2]
    for i, box in enumerate(bundle.detections or ()):
        if box.x_max < 0 or box.y_max < 0 or box.x_min > W - 1 or box.y_min > H - 1:
            continue
        color = np.array(OVERLAY_PALETTE[i % len(OVERLAY_PALETTE)], dtype=np.uint16)
        x0 = int(np.clip(round(box.x_min), 0, W - 1))
        x1 = int(np.clip(round(box.x_max), 0, W - 1))
        y0 = int(np.clip(round(box.y_min), 0, H - 1))
        y1 = int(np.clip(round(box.y_max), 0, H - 1))
        out[y0, x0:x1 + 1] = color
        out[y1, x0:x1 + 1] = color
        out[y0:y1 + 1, x0] = color
        out[y0:y1 + 1, x1] = color
    return out.astype(np.uint8)
