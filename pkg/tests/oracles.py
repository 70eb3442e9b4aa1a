"""Independent brute-force reference implementations used as test oracles.

Everything here is written directly from first principles (or as a
separate transcription of the interpolation formulas) and deliberately
avoids importing any rgbdsize internals, so a bug in the package cannot
hide in its own oracle.
"""

import itertools
import math

import numpy as np

# quadrant membership predicates, dx = px - qx, dy = py - qy
QUADRANT_PREDICATES = (
    lambda dx, dy: (dx > 0) & (dy >= 0),
    lambda dx, dy: (dx <= 0) & (dy > 0),
    lambda dx, dy: (dx < 0) & (dy <= 0),
    lambda dx, dy: (dx >= 0) & (dy < 0),
)


def project_pixel(X, Y, Z, fx, fy, cx, cy, k1=0.0, k2=0.0, k3=0.0):
    """Distorted pinhole projection, transcribed independently."""
    ru = math.sqrt((X * X + Y * Y) / (Z * Z))
    rd = ru + k1 * ru**3 + k2 * ru**5 + k3 * ru**7
    factor = rd / ru if ru >= 1e-12 else 1.0
    return (X / Z * fx * factor + cx, Y / Z * fy * factor + cy)


def brute_nearest(px, py, pids, qx, qy):
    """Linear scan; ties broken by lowest payload id. None when empty."""
    if len(px) == 0:
        return None
    d2 = (px - qx) ** 2 + (py - qy) ** 2
    i = np.lexsort((pids, d2))[0]
    return int(pids[i]), float(d2[i])


def brute_quadrant(px, py, pids, qx, qy, quadrant):
    """Nearest point inside one quadrant by filtered linear scan."""
    sel = QUADRANT_PREDICATES[quadrant](px - qx, py - qy)
    if not sel.any():
        return None
    return brute_nearest(px[sel], py[sel], pids[sel], qx, qy)


def dedup_smallest_z(pix, pts, width):
    """One entry per integer pixel cell (round half up), smallest Z wins."""
    best = {}
    for i in range(pix.shape[0]):
        cell = (
            int(math.floor(pix[i, 0] + 0.5)),
            int(math.floor(pix[i, 1] + 0.5)),
        )
        if cell not in best or pts[i, 2] < pts[best[cell], 2]:
            best[cell] = i
    keep = sorted(best.values())
    return pix[keep], pts[keep], np.asarray(keep, dtype=np.int64)


def nearest_image(pix, pts, width, height, max_radius=None):
    """Brute-force nearest-neighbor densification."""
    pix, pts, pids = dedup_smallest_z(pix, pts, width)
    px, py = pix[:, 0], pix[:, 1]
    out = np.zeros((height, width, 3), dtype=np.float64)
    max_r2 = None if max_radius is None else float(max_radius) ** 2
    for r in range(height):
        for c in range(width):
            pid, d2 = brute_nearest(px, py, pids, float(c), float(r))
            if max_r2 is not None and d2 > max_r2:
                continue
            out[r, c] = pts[np.searchsorted(pids, pid)]
    return out


def bilinear_image(pix, pts, width, height, edge_threshold=None, max_radius=None):
    """Brute-force transcription of the two-stage quadrant interpolation.

    Per pixel: exact hit copies the stored point; four quadrant
    neighbors (after the optional median edge gate) interpolate in two
    stages; fewer than four fall back to the nearest entry; degenerate
    stencils (pair collinear in x within 1e-9 px, or query on both
    auxiliary segments) use inverse-distance weighting.
    """
    pix, pts, pids = dedup_smallest_z(pix, pts, width)
    px, py = pix[:, 0], pix[:, 1]
    out = np.zeros((height, width, 3), dtype=np.float64)
    max_r2 = None if max_radius is None else float(max_radius) ** 2
    for r in range(height):
        for c in range(width):
            qx, qy = float(c), float(r)
            pid, nd2 = brute_nearest(px, py, pids, qx, qy)
            nearest_val = pts[np.searchsorted(pids, pid)]
            if max_r2 is not None and nd2 > max_r2:
                continue
            if nd2 == 0.0:
                out[r, c] = nearest_val
                continue
            neighbors = []
            for quad in range(4):
                hit = brute_quadrant(px, py, pids, qx, qy, quad)
                neighbors.append(None if hit is None else hit[0])
            if edge_threshold is not None:
                def z_of(n):
                    return pts[np.searchsorted(pids, n), 2]

                zs = sorted(z_of(n) for n in neighbors if n is not None)
                if zs:
                    mid = len(zs) // 2
                    med = zs[mid] if len(zs) % 2 == 1 else 0.5 * (zs[mid - 1] + zs[mid])
                    neighbors = [
                        n if n is not None and abs(z_of(n) - med) <= edge_threshold else None
                        for n in neighbors
                    ]
            present = [n for n in neighbors if n is not None]
            if len(present) < 4:
                out[r, c] = nearest_val
                continue
            rows = [np.searchsorted(pids, n) for n in present]
            xs = [px[i] for i in rows]
            ys = [py[i] for i in rows]
            vs = [pts[i] for i in rows]
            x0, x1, x2, x3 = xs
            y0, y1, y2, y3 = ys
            degenerate = abs(x1 - x0) < 1e-9 or abs(x2 - x3) < 1e-9
            if not degenerate:
                y_m = y0 + (qx - x0) * (y1 - y0) / (x1 - x0)
                y_n = y3 + (qx - x3) * (y2 - y3) / (x2 - x3)
                d_m = abs(qy - y_m)
                d_n = abs(qy - y_n)
                degenerate = d_m + d_n < 1e-9
            if degenerate:
                w = [1.0 / math.dist((xs[k], ys[k]), (qx, qy)) for k in range(4)]
                out[r, c] = sum(w[k] * vs[k] for k in range(4)) / sum(w)
                continue
            d0 = math.dist((qx, y_m), (x0, y0))
            d1 = math.dist((qx, y_m), (x1, y1))
            d2 = math.dist((qx, y_n), (x2, y2))
            d3 = math.dist((qx, y_n), (x3, y3))
            vm = (d1 * vs[0] + d0 * vs[1]) / (d0 + d1)
            vn = (d3 * vs[2] + d2 * vs[3]) / (d2 + d3)
            out[r, c] = (d_m * vn + d_n * vm) / (d_m + d_n)
    return out


def kmeans_optimal(depths, k):
    """Globally optimal scalar k-means by enumerating contiguous splits.

    Optimal 1-d k-means clusters are intervals of the sorted values, so
    enumerating the C(n-1, k-1) split positions is exhaustive.
    """
    vals = np.sort(np.asarray(depths, dtype=np.float64))
    n = vals.size
    best_sse = math.inf
    best_centers = None
    for splits in itertools.combinations(range(1, n), k - 1):
        bounds = (0,) + splits + (n,)
        sse = 0.0
        centers = []
        for a, b in zip(bounds, bounds[1:]):
            grp = vals[a:b]
            c = grp.mean()
            centers.append(float(c))
            sse += float(((grp - c) ** 2).sum())
        if sse < best_sse:
            best_sse = sse
            best_centers = centers
    return best_sse, best_centers
