"""Static 2-d k-d tree over pixel positions with quadrant-constrained queries.

The tree is stored as flat arrays (one slot per point) so that the hot
query loops can run inside numba kernels. All query results are
deterministic: equal distances are broken by the lowest payload_id, and
equal coordinates during construction by the lowest slot index.

Quadrants around a query pixel, with dx = px - qx and dy = py - qy:

    Q0: dx > 0,  dy >= 0      Q1: dx <= 0, dy > 0
    Q2: dx < 0,  dy <= 0      Q3: dx >= 0, dy < 0

The half-open boundaries assign every non-query point to exactly one
quadrant; a point exactly at the query belongs to none and is reported
as an exact hit instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .camera import PixelCoord

# (sign, strict) per axis for Q0..Q3; sign +1 means the neighbor's
# coordinate must exceed the query's (strictly when strict == 1).
QUADRANT_RULES = (
    (1, 1, 1, 0),
    (-1, 0, 1, 1),
    (-1, 1, -1, 0),
    (1, 0, -1, 1),
)


@dataclass(frozen=True)
class IndexedPoint:
    """A pixel position tagged with the index of its source entry."""

    position: PixelCoord
    payload_id: int


@dataclass(frozen=True)
class QuadrantNeighbors:
    """Per-quadrant nearest neighbors, or an exact-hit short circuit.

    When a stored point coincides exactly with the query, exact_hit is
    set and all four quadrant slots are None.
    """

    exact_hit: Optional[IndexedPoint]
    quadrants: tuple[Optional[tuple[IndexedPoint, float]], ...]


class KdTree:
    """Immutable balanced k-d tree built by median splits on alternating axes."""

    def __init__(self, xs, ys, payload_ids, left, right, axis, root):
        self.xs = xs
        self.ys = ys
        self.payload_ids = payload_ids
        self.left = left
        self.right = right
        self.axis = axis
        self.root = root
        for a in (xs, ys, payload_ids, left, right, axis):
            a.setflags(write=False)

    @property
    def size(self) -> int:
        return self.xs.shape[0]

    def point(self, slot: int) -> IndexedPoint:
        return IndexedPoint(
            PixelCoord(float(self.xs[slot]), float(self.ys[slot])),
            int(self.payload_ids[slot]),
        )

    def traverse(self):
        """Yield every reachable slot index in depth-first order."""
        if self.root < 0:
            return
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if self.right[node] >= 0:
                stack.append(self.right[node])
            if self.left[node] >= 0:
                stack.append(self.left[node])

    def nearest(self, q: PixelCoord) -> Optional[tuple[IndexedPoint, float]]:
        """Euclidean-nearest stored point, ties to lowest payload_id."""
        if self.root < 0:
            return None
        slot, d2 = _nearest_kernel(
            self.xs, self.ys, self.payload_ids, self.left, self.right,
            self.axis, self.root, float(q.x), float(q.y),
        )
        return self.point(slot), float(np.sqrt(d2))

    def nearest_per_quadrant(self, q: PixelCoord) -> QuadrantNeighbors:
        """Nearest stored point strictly inside each quadrant around q."""
        qx, qy = float(q.x), float(q.y)
        if self.root >= 0:
            slot, d2 = _nearest_kernel(
                self.xs, self.ys, self.payload_ids, self.left, self.right,
                self.axis, self.root, qx, qy,
            )
            if d2 == 0.0:
                return QuadrantNeighbors(exact_hit=self.point(slot), quadrants=(None,) * 4)
        found = []
        for sx, strict_x, sy, strict_y in QUADRANT_RULES:
            if self.root < 0:
                found.append(None)
                continue
            slot, d2 = _quadrant_kernel(
                self.xs, self.ys, self.payload_ids, self.left, self.right,
                self.axis, self.root, qx, qy, sx, strict_x, sy, strict_y,
            )
            if slot < 0:
                found.append(None)
            else:
                found.append((self.point(slot), float(np.sqrt(d2))))
        return QuadrantNeighbors(exact_hit=None, quadrants=tuple(found))


def build(points: Sequence[IndexedPoint] | np.ndarray, payload_ids=None) -> KdTree:
    """Build a balanced tree; deterministic for a fixed input order.

    Accepts either a sequence of IndexedPoint or an (N, 2) position
    array plus an optional payload_ids vector (defaults to 0..N-1).
    """
    if isinstance(points, np.ndarray):
        pos = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        pids = (
            np.arange(pos.shape[0], dtype=np.int64)
            if payload_ids is None
            else np.asarray(payload_ids, dtype=np.int64)
        )
    else:
        pos = np.array(
            [(p.position.x, p.position.y) for p in points], dtype=np.float64
        ).reshape(-1, 2)
        pids = np.array([p.payload_id for p in points], dtype=np.int64)
    n = pos.shape[0]
    xs = np.ascontiguousarray(pos[:, 0])
    ys = np.ascontiguousarray(pos[:, 1])
    left = np.full(n, -1, dtype=np.int64)
    right = np.full(n, -1, dtype=np.int64)
    axis = np.zeros(n, dtype=np.int64)
    coords = (xs, ys)

    def rec(slots: np.ndarray, ax: int) -> int:
        if slots.size == 0:
            return -1
        # total order (coordinate, slot) makes the split unique
        order = np.lexsort((slots, coords[ax][slots]))
        slots = slots[order]
        mid = slots.size // 2
        node = int(slots[mid])
        axis[node] = ax
        left[node] = rec(slots[:mid], 1 - ax)
        right[node] = rec(slots[mid + 1:], 1 - ax)
        return node

    root = rec(np.arange(n, dtype=np.int64), 0)
    return KdTree(xs, ys, pids, left, right, axis, root)


def nearest(tree: KdTree, q: PixelCoord):
    return tree.nearest(q)


def nearest_per_quadrant(tree: KdTree, q: PixelCoord):
    return tree.nearest_per_quadrant(q)


# ---------------------------------------------------------------------------
# numba kernels (shared with the densification loops)
# ---------------------------------------------------------------------------

_STACK = 128  # DFS stack bound; ample for balanced trees up to 2^60 points


@njit(cache=True)
def _nearest_kernel(xs, ys, pids, left, right, axis, root, qx, qy):
    """Nearest slot and squared distance; ties broken by lowest payload id."""
    best = -1
    best_d2 = np.inf
    best_pid = np.int64(0x7FFFFFFFFFFFFFFF)
    stack_node = np.empty(_STACK, np.int64)
    stack_d2 = np.empty(_STACK, np.float64)
    stack_node[0] = root
    stack_d2[0] = 0.0
    top = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        if stack_d2[top] > best_d2:
            continue
        while node != -1:
            dx = xs[node] - qx
            dy = ys[node] - qy
            d2 = dx * dx + dy * dy
            if d2 < best_d2 or (d2 == best_d2 and pids[node] < best_pid):
                best = node
                best_d2 = d2
                best_pid = pids[node]
            if axis[node] == 0:
                diff = qx - xs[node]
            else:
                diff = qy - ys[node]
            if diff <= 0.0:
                near = left[node]
                far = right[node]
            else:
                near = right[node]
                far = left[node]
            ad2 = diff * diff
            if far != -1 and ad2 <= best_d2:
                stack_node[top] = far
                stack_d2[top] = ad2
                top += 1
            node = near
    return best, best_d2


@njit(cache=True)
def _quadrant_kernel(xs, ys, pids, left, right, axis, root, qx, qy,
                     sx, strict_x, sy, strict_y):
    """Nearest slot within one half-open quadrant, or (-1, inf).

    sx/sy are +1 or -1 (required sign of dx/dy); strict_x/strict_y are
    1 when the sign must be strict, 0 when zero is allowed.
    """
    best = -1
    best_d2 = np.inf
    best_pid = np.int64(0x7FFFFFFFFFFFFFFF)
    stack_node = np.empty(_STACK, np.int64)
    stack_d2 = np.empty(_STACK, np.float64)
    stack_node[0] = root
    stack_d2[0] = 0.0
    top = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        if stack_d2[top] > best_d2:
            continue
        while node != -1:
            dx = xs[node] - qx
            dy = ys[node] - qy
            if sx > 0:
                ok = dx > 0.0 if strict_x == 1 else dx >= 0.0
            else:
                ok = dx < 0.0 if strict_x == 1 else dx <= 0.0
            if ok:
                if sy > 0:
                    ok = dy > 0.0 if strict_y == 1 else dy >= 0.0
                else:
                    ok = dy < 0.0 if strict_y == 1 else dy <= 0.0
            if ok:
                d2 = dx * dx + dy * dy
                if d2 < best_d2 or (d2 == best_d2 and pids[node] < best_pid):
                    best = node
                    best_d2 = d2
                    best_pid = pids[node]
            ax = axis[node]
            split = xs[node] if ax == 0 else ys[node]
            qa = qx if ax == 0 else qy
            s = sx if ax == 0 else sy
            strict = strict_x if ax == 0 else strict_y
            # feasibility of each side under the quadrant constraint:
            # left holds coords <= split, right holds coords >= split
            if s > 0:
                left_ok = split > qa if strict == 1 else split >= qa
                right_ok = True
            else:
                left_ok = True
                right_ok = split < qa if strict == 1 else split <= qa
            diff = qa - split
            ad2 = diff * diff
            if diff <= 0.0:
                near, near_ok = left[node], left_ok
                far, far_ok = right[node], right_ok
            else:
                near, near_ok = right[node], right_ok
                far, far_ok = left[node], left_ok
            if far != -1 and far_ok and ad2 <= best_d2:
                stack_node[top] = far
                stack_d2[top] = ad2
                top += 1
            node = near if near_ok else -1
    return best, best_d2
