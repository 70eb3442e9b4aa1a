"""Sparse-to-dense depth: cloud projection and per-pixel (X, Y, Z) filling.

Two fill strategies over the projected sparse cloud, both driven by the
k-d tree in rgbdsize.spatial:

- nearest: copy the metric point of the nearest sparse entry.
- bilinear: find the nearest entry in each of the four quadrants around
  the pixel and interpolate in two stages, first along the upper pair
  (Q0, Q1) to an auxiliary point m at the query's x, then along the
  lower pair (Q3, Q2) to n, then between m and n. Pixels with fewer
  than four quadrant neighbors fall back to nearest assignment.

An optional edge gate discards quadrant neighbors whose depth deviates
from the neighbor median by more than a threshold, so interpolation
never mixes points from different surfaces across a depth discontinuity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Literal, Optional, Sequence

import numpy as np
from numba import njit, prange

from .camera import (
    CameraIntrinsics,
    MetricPoint,
    PixelCoord,
    RigidPose,
    apply_pose_to_array,
    project_points,
)
from .spatial import _nearest_kernel, _quadrant_kernel, build

# Below this pixel separation of a quadrant pair the interpolation slope
# divides by ~0; such stencils fall back to inverse-distance weighting.
COLLINEAR_EPS = 1e-9


class EmptySparseCloud(ValueError):
    """Raised when densification is asked to fill from zero entries."""


@dataclass(frozen=True)
class DensifyConfig:
    method: Literal["nearest", "bilinear"] = "bilinear"
    edge_threshold: Optional[float] = None  # meters; None disables the gate
    max_radius: Optional[float] = None  # pixels; None fills everything

    def __post_init__(self):
        if self.method not in ("nearest", "bilinear"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.edge_threshold is not None and self.edge_threshold <= 0:
            raise ValueError("edge_threshold must be positive when set")
        if self.max_radius is not None and self.max_radius <= 0:
            raise ValueError("max_radius must be positive when set")


@dataclass(frozen=True)
class SparsePixelCloud:
    """Projected cloud entries: sub-pixel positions with metric points."""

    pixels: np.ndarray  # (N, 2) float64, in [0, width) x [0, height)
    points: np.ndarray  # (N, 3) float64, Z > 0
    intrinsics: CameraIntrinsics
    dropped_behind: int = 0
    dropped_outside: int = 0

    def __post_init__(self):
        pix = np.ascontiguousarray(np.asarray(self.pixels, dtype=np.float64).reshape(-1, 2))
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64).reshape(-1, 3))
        if pix.shape[0] != pts.shape[0]:
            raise ValueError("pixels and points must have matching length")
        if pix.shape[0]:
            if pix[:, 0].min() < 0 or pix[:, 0].max() >= self.intrinsics.width:
                raise ValueError("pixel x outside image bounds")
            if pix[:, 1].min() < 0 or pix[:, 1].max() >= self.intrinsics.height:
                raise ValueError("pixel y outside image bounds")
            if pts[:, 2].min() <= 0:
                raise ValueError("all metric points must have Z > 0")
        object.__setattr__(self, "pixels", pix)
        object.__setattr__(self, "points", pts)
        pix.setflags(write=False)
        pts.setflags(write=False)

    def __len__(self) -> int:
        return self.pixels.shape[0]

    def entries(self) -> Iterator[tuple[PixelCoord, MetricPoint]]:
        for (x, y), (X, Y, Z) in zip(self.pixels, self.points):
            yield PixelCoord(float(x), float(y)), MetricPoint(float(X), float(Y), float(Z))


@dataclass(frozen=True)
class MetricImage:
    """Dense per-pixel (X, Y, Z) in meters; (0, 0, 0) encodes no data."""

    data: np.ndarray  # (H, W, 3) float64

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 3 or d.shape[2] != 3:
            raise ValueError("metric image must be (H, W, 3)")
        filled = d.reshape(-1, 3).any(axis=1)
        if filled.any() and d.reshape(-1, 3)[filled, 2].min() <= 0:
            raise ValueError("non-empty pixels must have Z > 0")
        object.__setattr__(self, "data", d)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def depth(self) -> np.ndarray:
        """Per-pixel Z in meters (0 where no data)."""
        return self.data[:, :, 2]


@dataclass(frozen=True)
class BilinearStencil:
    """Intermediate quantities of the two-stage quadrant interpolation.

    p0..p3 are the quadrant neighbors (Q0..Q3) as (pixel, metric) pairs.
    m lies on the p0-p1 segment and n on the p3-p2 segment, both at the
    query's x; d0..d3 are pixel distances from m/n to their pair, and
    d_m/d_n from the query to m/n.
    """

    p0: tuple[PixelCoord, MetricPoint]
    p1: tuple[PixelCoord, MetricPoint]
    p2: tuple[PixelCoord, MetricPoint]
    p3: tuple[PixelCoord, MetricPoint]
    x_m: float
    y_m: float
    x_n: float
    y_n: float
    d0: float
    d1: float
    d2: float
    d3: float
    d_m: float
    d_n: float
    X_m: float
    Y_m: float
    Z_m: float
    X_n: float
    Y_n: float
    Z_n: float

    def value(self) -> MetricPoint:
        """Final interpolated metric point at the query pixel."""
        s = self.d_m + self.d_n
        return MetricPoint(
            (self.d_m * self.X_n + self.d_n * self.X_m) / s,
            (self.d_m * self.Y_n + self.d_n * self.Y_m) / s,
            (self.d_m * self.Z_n + self.d_n * self.Z_m) / s,
        )


def bilinear_stencil(
    q: PixelCoord,
    corners: Sequence[tuple[PixelCoord, MetricPoint]],
) -> BilinearStencil:
    """Build the interpolation stencil for four quadrant neighbors (Q0..Q3).

    Raises ValueError for degenerate geometry: a quadrant pair collinear
    in x within COLLINEAR_EPS (the slope formula would divide by ~0), or
    a query lying on both auxiliary segments (the final combination
    would be 0/0).
    """
    (c0, v0), (c1, v1), (c2, v2), (c3, v3) = corners
    if abs(c1.x - c0.x) < COLLINEAR_EPS or abs(c2.x - c3.x) < COLLINEAR_EPS:
        raise ValueError("degenerate stencil: quadrant pair collinear in x")
    x = q.x
    y_m = c0.y + (x - c0.x) * (c1.y - c0.y) / (c1.x - c0.x)
    y_n = c3.y + (x - c3.x) * (c2.y - c3.y) / (c2.x - c3.x)
    if abs(q.y - y_m) + abs(q.y - y_n) < COLLINEAR_EPS:
        raise ValueError("degenerate stencil: query lies on both auxiliary segments")
    d0 = math.sqrt((x - c0.x) ** 2 + (y_m - c0.y) ** 2)
    d1 = math.sqrt((x - c1.x) ** 2 + (y_m - c1.y) ** 2)
    d2 = math.sqrt((x - c2.x) ** 2 + (y_n - c2.y) ** 2)
    d3 = math.sqrt((x - c3.x) ** 2 + (y_n - c3.y) ** 2)
    X_m = (d1 * v0.X + d0 * v1.X) / (d0 + d1)
    Y_m = (d1 * v0.Y + d0 * v1.Y) / (d0 + d1)
    Z_m = (d1 * v0.Z + d0 * v1.Z) / (d0 + d1)
    X_n = (d3 * v2.X + d2 * v3.X) / (d2 + d3)
    Y_n = (d3 * v2.Y + d2 * v3.Y) / (d2 + d3)
    Z_n = (d3 * v2.Z + d2 * v3.Z) / (d2 + d3)
    return BilinearStencil(
        p0=(c0, v0), p1=(c1, v1), p2=(c2, v2), p3=(c3, v3),
        x_m=x, y_m=y_m, x_n=x, y_n=y_n,
        d0=d0, d1=d1, d2=d2, d3=d3,
        d_m=abs(q.y - y_m), d_n=abs(q.y - y_n),
        X_m=X_m, Y_m=Y_m, Z_m=Z_m, X_n=X_n, Y_n=Y_n, Z_n=Z_n,
    )


# ---------------------------------------------------------------------------
# projection
# ---------------------------------------------------------------------------

def project_cloud(
    cloud: np.ndarray | Sequence[MetricPoint],
    depth_to_color: RigidPose,
    intr: CameraIntrinsics,
) -> SparsePixelCloud:
    """Transform a depth-frame cloud into the color frame and project it.

    Points behind the camera (Z <= 0 after the transform) and points
    projecting outside the image are silently dropped; their counts are
    reported on the returned cloud. Entry order follows input order.
    """
    if not isinstance(cloud, np.ndarray):
        cloud = np.array([(p.X, p.Y, p.Z) for p in cloud], dtype=np.float64).reshape(-1, 3)
    pts = apply_pose_to_array(depth_to_color, cloud)
    in_front = pts[:, 2] > 0
    dropped_behind = int((~in_front).sum())
    pts = pts[in_front]
    pix = project_points(pts, intr)
    inside = (
        (pix[:, 0] >= 0)
        & (pix[:, 0] < intr.width)
        & (pix[:, 1] >= 0)
        & (pix[:, 1] < intr.height)
    )
    dropped_outside = int((~inside).sum())
    return SparsePixelCloud(
        pixels=pix[inside],
        points=pts[inside],
        intrinsics=intr,
        dropped_behind=dropped_behind,
        dropped_outside=dropped_outside,
    )


def dedup_by_pixel(sparse: SparsePixelCloud):
    """One entry per integer pixel cell, keeping the smallest Z.

    Cells are the pixel centers positions round to (half-up). Survivors
    keep their sub-pixel positions and original entry indices; relative
    order is preserved.
    """
    pix, pts = sparse.pixels, sparse.points
    n = pix.shape[0]
    idx = np.arange(n, dtype=np.int64)
    # rounded columns reach width for x in [width-0.5, width), so the row
    # stride must be width+1 to keep cell keys collision-free
    cell = (
        np.floor(pix[:, 1] + 0.5).astype(np.int64) * np.int64(sparse.intrinsics.width + 1)
        + np.floor(pix[:, 0] + 0.5).astype(np.int64)
    )
    order = np.lexsort((idx, pts[:, 2], cell))
    cell_sorted = cell[order]
    first = np.ones(n, dtype=bool)
    first[1:] = cell_sorted[1:] != cell_sorted[:-1]
    keep = np.sort(order[first])
    return (
        np.ascontiguousarray(pix[keep]),
        np.ascontiguousarray(pts[keep]),
        keep,
    )


# ---------------------------------------------------------------------------
# densification
# ---------------------------------------------------------------------------

def densify(sparse: SparsePixelCloud, cfg: DensifyConfig) -> MetricImage:
    if cfg.method == "nearest":
        return densify_nearest(sparse, cfg)
    return densify_bilinear(sparse, cfg)


def densify_nearest(sparse: SparsePixelCloud, cfg: DensifyConfig) -> MetricImage:
    """Assign each pixel the metric point of its nearest sparse entry."""
    if cfg.method != "nearest":
        raise ValueError("densify_nearest requires cfg.method == 'nearest'")
    tree, pts, _ = _prepare(sparse)
    out = np.zeros((sparse.intrinsics.height, sparse.intrinsics.width, 3), dtype=np.float64)
    _fill_nearest(
        tree.xs, tree.ys, tree.payload_ids, tree.left, tree.right, tree.axis, tree.root,
        pts, _max_r2(cfg), out,
    )
    return MetricImage(out)


def densify_bilinear(sparse: SparsePixelCloud, cfg: DensifyConfig) -> MetricImage:
    """Four-quadrant two-stage interpolation with nearest fallback."""
    if cfg.method != "bilinear":
        raise ValueError("densify_bilinear requires cfg.method == 'bilinear'")
    tree, pts, _ = _prepare(sparse)
    out = np.zeros((sparse.intrinsics.height, sparse.intrinsics.width, 3), dtype=np.float64)
    edge = -1.0 if cfg.edge_threshold is None else float(cfg.edge_threshold)
    _fill_bilinear(
        tree.xs, tree.ys, tree.payload_ids, tree.left, tree.right, tree.axis, tree.root,
        pts, _max_r2(cfg), edge, out,
    )
    return MetricImage(out)


def densify_nearest_linear(sparse: SparsePixelCloud, cfg: DensifyConfig) -> MetricImage:
    """Nearest-neighbor fill by exhaustive scan; the --bench baseline.

    Produces output identical to densify_nearest (same deduplication and
    tie-break), only without the spatial index.
    """
    if cfg.method != "nearest":
        raise ValueError("densify_nearest_linear requires cfg.method == 'nearest'")
    if len(sparse) == 0:
        raise EmptySparseCloud("no sparse entries to densify from")
    pix, pts, pids = dedup_by_pixel(sparse)
    out = np.zeros((sparse.intrinsics.height, sparse.intrinsics.width, 3), dtype=np.float64)
    _fill_nearest_linear(
        np.ascontiguousarray(pix[:, 0]), np.ascontiguousarray(pix[:, 1]), pids,
        pts, _max_r2(cfg), out,
    )
    return MetricImage(out)


def _prepare(sparse: SparsePixelCloud):
    if len(sparse) == 0:
        raise EmptySparseCloud("no sparse entries to densify from")
    pix, pts, pids = dedup_by_pixel(sparse)
    tree = build(pix, payload_ids=pids)
    return tree, pts, pids


def _max_r2(cfg: DensifyConfig) -> float:
    return -1.0 if cfg.max_radius is None else float(cfg.max_radius) ** 2


@njit(cache=True, parallel=True)
def _fill_nearest(xs, ys, pids, left, right, axis, root, pts, max_r2, out):
    H, W = out.shape[0], out.shape[1]
    for r in prange(H):
        for c in range(W):
            slot, d2 = _nearest_kernel(xs, ys, pids, left, right, axis, root,
                                       float(c), float(r))
            if max_r2 >= 0.0 and d2 > max_r2:
                continue
            out[r, c, 0] = pts[slot, 0]
            out[r, c, 1] = pts[slot, 1]
            out[r, c, 2] = pts[slot, 2]


@njit(cache=True, parallel=True)
def _fill_nearest_linear(xp, yp, pids, pts, max_r2, out):
    H, W = out.shape[0], out.shape[1]
    n = xp.shape[0]
    for r in prange(H):
        for c in range(W):
            qx = float(c)
            qy = float(r)
            best = -1
            best_d2 = np.inf
            best_pid = np.int64(0x7FFFFFFFFFFFFFFF)
            for i in range(n):
                dx = xp[i] - qx
                dy = yp[i] - qy
                d2 = dx * dx + dy * dy
                if d2 < best_d2 or (d2 == best_d2 and pids[i] < best_pid):
                    best = i
                    best_d2 = d2
                    best_pid = pids[i]
            if max_r2 >= 0.0 and best_d2 > max_r2:
                continue
            out[r, c, 0] = pts[best, 0]
            out[r, c, 1] = pts[best, 1]
            out[r, c, 2] = pts[best, 2]


@njit(cache=True)
def _median_of(vals, n):
    # insertion sort of at most 4 values
    for i in range(1, n):
        v = vals[i]
        j = i - 1
        while j >= 0 and vals[j] > v:
            vals[j + 1] = vals[j]
            j -= 1
        vals[j + 1] = v
    if n % 2 == 1:
        return vals[n // 2]
    return 0.5 * (vals[n // 2 - 1] + vals[n // 2])


@njit(cache=True, parallel=True)
def _fill_bilinear(xs, ys, pids, left, right, axis, root, pts, max_r2, edge_thr, out):
    H, W = out.shape[0], out.shape[1]
    for r in prange(H):
        slots = np.empty(4, np.int64)
        d2s = np.empty(4, np.float64)
        zbuf = np.empty(4, np.float64)
        for c in range(W):
            qx = float(c)
            qy = float(r)
            nslot, nd2 = _nearest_kernel(xs, ys, pids, left, right, axis, root, qx, qy)
            if max_r2 >= 0.0 and nd2 > max_r2:
                continue
            if nd2 == 0.0:
                out[r, c, 0] = pts[nslot, 0]
                out[r, c, 1] = pts[nslot, 1]
                out[r, c, 2] = pts[nslot, 2]
                continue
            slots[0], d2s[0] = _quadrant_kernel(xs, ys, pids, left, right, axis, root,
                                                qx, qy, 1, 1, 1, 0)
            slots[1], d2s[1] = _quadrant_kernel(xs, ys, pids, left, right, axis, root,
                                                qx, qy, -1, 0, 1, 1)
            slots[2], d2s[2] = _quadrant_kernel(xs, ys, pids, left, right, axis, root,
                                                qx, qy, -1, 1, -1, 0)
            slots[3], d2s[3] = _quadrant_kernel(xs, ys, pids, left, right, axis, root,
                                                qx, qy, 1, 0, -1, 1)
            if edge_thr >= 0.0:
                m = 0
                for k in range(4):
                    if slots[k] >= 0:
                        zbuf[m] = pts[slots[k], 2]
                        m += 1
                if m > 0:
                    med = _median_of(zbuf, m)
                    for k in range(4):
                        if slots[k] >= 0 and abs(pts[slots[k], 2] - med) > edge_thr:
                            slots[k] = -1
            count = 0
            for k in range(4):
                if slots[k] >= 0:
                    count += 1
            if count < 4:
                out[r, c, 0] = pts[nslot, 0]
                out[r, c, 1] = pts[nslot, 1]
                out[r, c, 2] = pts[nslot, 2]
                continue
            s0, s1, s2, s3 = slots[0], slots[1], slots[2], slots[3]
            x0, y0 = xs[s0], ys[s0]
            x1, y1 = xs[s1], ys[s1]
            x2, y2 = xs[s2], ys[s2]
            x3, y3 = xs[s3], ys[s3]
            y_m = y_n = dm = dn = 0.0
            degenerate = abs(x1 - x0) < COLLINEAR_EPS or abs(x2 - x3) < COLLINEAR_EPS
            if not degenerate:
                y_m = y0 + (qx - x0) * (y1 - y0) / (x1 - x0)
                y_n = y3 + (qx - x3) * (y2 - y3) / (x2 - x3)
                dm = abs(qy - y_m)
                dn = abs(qy - y_n)
                # query on both auxiliary segments (can happen when a
                # sample sits within an ulp of the pixel): 0/0 guard
                degenerate = dm + dn < COLLINEAR_EPS
            if degenerate:
                # degenerate stencil: inverse-distance weighting instead
                wsum = 0.0
                vx = 0.0
                vy = 0.0
                vz = 0.0
                for k in range(4):
                    w = 1.0 / np.sqrt(d2s[k])
                    wsum += w
                    vx += w * pts[slots[k], 0]
                    vy += w * pts[slots[k], 1]
                    vz += w * pts[slots[k], 2]
                out[r, c, 0] = vx / wsum
                out[r, c, 1] = vy / wsum
                out[r, c, 2] = vz / wsum
                continue
            d0 = np.sqrt((qx - x0) ** 2 + (y_m - y0) ** 2)
            d1 = np.sqrt((qx - x1) ** 2 + (y_m - y1) ** 2)
            d2_ = np.sqrt((qx - x2) ** 2 + (y_n - y2) ** 2)
            d3 = np.sqrt((qx - x3) ** 2 + (y_n - y3) ** 2)
            w01 = d0 + d1
            w23 = d2_ + d3
            wmn = dm + dn
            for k in range(3):
                vm = (d1 * pts[s0, k] + d0 * pts[s1, k]) / w01
                vn = (d3 * pts[s2, k] + d2_ * pts[s3, k]) / w23
                out[r, c, k] = (dm * vn + dn * vm) / wmn
