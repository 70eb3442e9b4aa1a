"""Object dimensions in meters from a foreground mask and a metric image.

Height is the span of the foreground points' Y coordinates between two
percentiles, width the span of X; with percentiles (0, 1) this is the
literal extreme-point span. Percentiles use the nearest-rank method on
the sorted coordinate list, so results are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .densify import MetricImage
from .segment import (
    DegenerateInput,
    DetectionBox,
    EmptyRegion,
    SegmentMask,
    segment_bbox,
    segment_frame,
)

FRAME_OBJECT_LABEL = "scene-object"


class InsufficientForeground(ValueError):
    """Raised when a mask holds fewer than two valid metric points."""


@dataclass(frozen=True)
class Measurement:
    label: str
    height: float  # meters, percentile span of Y
    width: float  # meters, percentile span of X
    mean_depth: float  # meters, mean Z of foreground points
    pixel_count: int
    extent_percentiles: tuple[float, float]


@dataclass(frozen=True)
class MeasurementFailure:
    """Per-object error record; segmentation failures never kill a run."""

    label: str
    error: str  # exception class name
    detail: str


@dataclass(frozen=True)
class MeasureConfig:
    percentiles: tuple[float, float] = (0.01, 0.99)

    def __post_init__(self):
        lo, hi = self.percentiles
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"percentiles must satisfy 0 <= lo < hi <= 1, got {self.percentiles}")


def nearest_rank(sorted_values: np.ndarray, p: float) -> float:
    """Nearest-rank percentile of an ascending array (no interpolation)."""
    n = sorted_values.shape[0]
    # the small epsilon keeps exact products like 0.2 * 5 from rounding up
    rank = math.ceil(p * n - 1e-12)
    rank = min(max(rank, 1), n)
    return float(sorted_values[rank - 1])


def measure_extent(
    mask: SegmentMask,
    metric: MetricImage,
    percentiles: tuple[float, float] = (0.0, 1.0),
    label: str = FRAME_OBJECT_LABEL,
) -> Measurement:
    """Percentile extent of the masked metric points.

    height = span of Y between the two percentiles, width = span of X,
    mean_depth = mean Z. Requires at least two foreground pixels with
    valid (Z > 0) metric points.
    """
    lo, hi = percentiles
    if not (0.0 <= lo < hi <= 1.0):
        raise ValueError(f"percentiles must satisfy 0 <= lo < hi <= 1, got {percentiles}")
    rows, cols = mask.frame_indices()
    pts = metric.data[rows, cols]
    valid = pts[:, 2] > 0
    pts = pts[valid]
    if pts.shape[0] < 2:
        raise InsufficientForeground(
            f"mask for {label!r} has {pts.shape[0]} valid metric points, need >= 2"
        )
    xs = np.sort(pts[:, 0])
    ys = np.sort(pts[:, 1])
    return Measurement(
        label=label,
        height=nearest_rank(ys, hi) - nearest_rank(ys, lo),
        width=nearest_rank(xs, hi) - nearest_rank(xs, lo),
        mean_depth=float(pts[:, 2].mean()),
        pixel_count=int(pts.shape[0]),
        extent_percentiles=(float(lo), float(hi)),
    )


def segment_regions(
    metric: MetricImage,
    detections: Optional[Sequence[DetectionBox]],
) -> list[tuple[str, SegmentMask | MeasurementFailure]]:
    """Segment the frame (scheme 1) or each detection box (scheme 2).

    Returns one (label, mask-or-failure) entry per object; segmentation
    errors become failure records rather than exceptions.
    """
    regions: list[tuple[str, SegmentMask | MeasurementFailure]] = []
    if not detections:
        try:
            regions.append((FRAME_OBJECT_LABEL, segment_frame(metric)))
        except DegenerateInput as e:
            regions.append(
                (FRAME_OBJECT_LABEL, MeasurementFailure(FRAME_OBJECT_LABEL, type(e).__name__, str(e)))
            )
        return regions
    for box in detections:
        try:
            regions.append((box.label, segment_bbox(metric, box)))
        except (EmptyRegion, DegenerateInput) as e:
            regions.append((box.label, MeasurementFailure(box.label, type(e).__name__, str(e))))
    return regions


def measure_regions(
    metric: MetricImage,
    regions: Sequence[tuple[str, SegmentMask | MeasurementFailure]],
    percentiles: tuple[float, float],
):
    """Measure every successfully segmented region.

    Returns (measurements, failures, masks) where masks[i] is
    (object_index, mask) for measurements[i]; object_index is the
    position in the input region list, for stable overlay colors.
    """
    measurements: list[Measurement] = []
    failures: list[MeasurementFailure] = []
    masks: list[tuple[int, SegmentMask]] = []
    for i, (label, region) in enumerate(regions):
        if isinstance(region, MeasurementFailure):
            failures.append(region)
            continue
        try:
            measurements.append(measure_extent(region, metric, percentiles, label=label))
            masks.append((i, region))
        except InsufficientForeground as e:
            failures.append(MeasurementFailure(label, type(e).__name__, str(e)))
    return measurements, failures, masks


def measure_scene(
    metric: MetricImage,
    detections: Optional[Sequence[DetectionBox]] = None,
    cfg: MeasureConfig = MeasureConfig(),
) -> tuple[list[Measurement], list[MeasurementFailure]]:
    """One measurement per object: scheme 1 without detections, scheme 2 with.

    Per-object failures are collected, never raised.
    """
    regions = segment_regions(metric, detections)
    measurements, failures, _ = measure_regions(metric, regions, cfg.percentiles)
    return measurements, failures
