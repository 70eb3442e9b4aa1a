"""Depth-based segmentation into no-data / foreground / background.

Pixels are clustered on their scalar depth with Lloyd's algorithm.
Frames that contain zero-depth (no data) pixels use k = 3, where the
lowest cluster collects the zeros; otherwise k = 2. The foreground is
the second cluster when a zero cluster exists (nearer than background,
farther than nothing) and the nearest cluster otherwise.

Initialization is deterministic - (0, smallest nonzero, largest) for
k = 3 and (smallest, largest) for k = 2 - so identical inputs always
produce identical models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .densify import MetricImage


class DegenerateInput(ValueError):
    """Raised when the data cannot support the requested cluster count."""


class EmptyRegion(ValueError):
    """Raised when a detection box does not intersect the image."""


@dataclass(frozen=True)
class DepthSample:
    """One pixel's depth in meters; 0 means no data."""

    pixel: tuple[int, int]  # (x, y)
    depth: float

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError(f"depth must be >= 0, got {self.depth}")


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centers: tuple[float, ...]  # sorted ascending, strictly increasing
    assignment: np.ndarray  # per-sample cluster index
    n_iter: int
    sse_history: tuple[float, ...]  # SSE after each assignment pass

    @property
    def sse(self) -> float:
        return self.sse_history[-1]


@dataclass(frozen=True)
class DetectionBox:
    """An externally supplied detection; pixel coords, x_min < x_max."""

    label: str
    score: float
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"degenerate box ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )


@dataclass(frozen=True)
class SegmentMask:
    """Boolean foreground mask over a region of the frame."""

    mask: np.ndarray  # (h, w) bool
    x0: int = 0  # region origin in frame coordinates
    y0: int = 0

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "mask", m)

    @property
    def foreground_count(self) -> int:
        return int(self.mask.sum())

    def frame_indices(self) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of foreground pixels in full-frame coordinates."""
        rows, cols = np.nonzero(self.mask)
        return rows + self.y0, cols + self.x0


def _as_depth_array(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        return samples.astype(np.float64, copy=False).ravel()
    if len(samples) and isinstance(samples[0], DepthSample):
        return np.array([s.depth for s in samples], dtype=np.float64)
    return np.asarray(samples, dtype=np.float64).ravel()


def kmeans_depth(
    samples: Sequence[DepthSample] | Sequence[float] | np.ndarray,
    k: int,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> ClusterModel:
    """Lloyd's algorithm on scalar depths with deterministic seeding.

    Converges when the largest center movement drops below tol. Centers
    are returned sorted ascending with assignments relabeled to match;
    ties in the assignment step go to the lower-indexed center.
    """
    depths = _as_depth_array(samples)
    if k not in (2, 3):
        raise ValueError(f"k must be 2 or 3, got {k}")
    if depths.size and depths.min() < 0:
        raise ValueError("depths must be >= 0")
    if np.unique(depths).size < k:
        raise DegenerateInput(
            f"need at least {k} distinct depth values, got {np.unique(depths).size}"
        )

    nonzero = depths[depths > 0]
    if k == 3:
        centers = np.array([0.0, nonzero.min(), depths.max()])
    else:
        centers = np.array([depths.min(), depths.max()])

    sse_history = []
    assignment = np.zeros(depths.size, dtype=np.int64)
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        # argmin returns the first minimum: ties go to the lower index
        assignment = np.argmin(np.abs(depths[:, None] - centers[None, :]), axis=1)
        sse_history.append(float(((depths - centers[assignment]) ** 2).sum()))
        moved = 0.0
        new_centers = centers.copy()
        for j in range(k):
            members = depths[assignment == j]
            if members.size:  # empty clusters keep their previous center
                new_centers[j] = members.mean()
            moved = max(moved, abs(new_centers[j] - centers[j]))
        centers = new_centers
        if moved < tol:
            break

    # final assignment against the converged centers
    assignment = np.argmin(np.abs(depths[:, None] - centers[None, :]), axis=1)
    sse_history.append(float(((depths - centers[assignment]) ** 2).sum()))

    order = np.argsort(centers, kind="stable")
    centers = centers[order]
    if not np.all(np.diff(centers) > 0):
        raise DegenerateInput("cluster centers collapsed")
    relabel = np.empty(k, dtype=np.int64)
    relabel[order] = np.arange(k)
    assignment = relabel[assignment]
    return ClusterModel(
        k=k,
        centers=tuple(float(c) for c in centers),
        assignment=assignment,
        n_iter=n_iter,
        sse_history=tuple(sse_history),
    )


def select_foreground(model: ClusterModel) -> int:
    """Index of the foreground cluster.

    With a zero-depth cluster present (k = 3) the object sits in the
    second cluster: no-data pixels are at 0, background is farthest.
    With k = 2 the nearer cluster is the object.
    """
    return 1 if model.k == 3 else 0


def segment_frame(depth: MetricImage) -> SegmentMask:
    """Full-frame depth clustering (scheme 1); k picked by zero presence."""
    depths = depth.depth.ravel()
    k = 3 if (depths == 0.0).any() else 2
    model = kmeans_depth(depths, k)
    fg = select_foreground(model)
    mask = (model.assignment == fg) & (depths > 0)
    return SegmentMask(mask.reshape(depth.height, depth.width))


def segment_bbox(depth: MetricImage, box: DetectionBox) -> SegmentMask:
    """Depth clustering restricted to a detection box (scheme 2).

    The box is clipped to the image; the returned mask covers exactly
    the clipped region.
    """
    x0 = max(0, int(math.floor(box.x_min)))
    y0 = max(0, int(math.floor(box.y_min)))
    x1 = min(depth.width, int(math.ceil(box.x_max)))
    y1 = min(depth.height, int(math.ceil(box.y_max)))
    if x0 >= x1 or y0 >= y1:
        raise EmptyRegion(f"box {box.label!r} does not intersect the image")
    region = depth.depth[y0:y1, x0:x1]
    depths = region.ravel()
    k = 3 if (depths == 0.0).any() else 2
    model = kmeans_depth(depths, k)
    fg = select_foreground(model)
    mask = (model.assignment == fg) & (depths > 0)
    return SegmentMask(mask.reshape(region.shape), x0=x0, y0=y0)
