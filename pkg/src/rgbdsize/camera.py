"""Camera model, radial distortion, and rigid pose algebra.

Coordinate conventions used throughout:

- Camera frame: X right, Y down, Z forward (optical axis). Points with
  Z > 0 are in front of the camera.
- Pixel frame: x right, y down, origin at the top-left pixel center.
- Quaternions are (qw, qx, qy, qz), unit norm, right-handed rotations.
- A pose (R, t) maps a point p to R @ p + t.

Projection follows the distorted pinhole model

    x = X/Z * fx * rd/ru + cx
    y = Y/Z * fy * rd/ru + cy

with ru = sqrt((X^2 + Y^2) / Z^2) and
rd = ru + k1*ru^3 + k2*ru^5 + k3*ru^7.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Below this normalized radius the rd/ru factor is replaced by its
# analytic limit 1, avoiding a 0/0 on the optical axis.
AXIS_EPS = 1e-12

# Unit-quaternion constructor tolerance: renormalize only when |q|^2
# deviates more than this, so already-normalized values round-trip
# through serialization bit-exactly.
_QUAT_NORM_TOL = 1e-12


class NonPositiveDepth(ValueError):
    """Raised when an operation requires Z > 0 but got Z <= 0."""


class EmptyTrajectory(ValueError):
    """Raised when pose interpolation is asked for an empty trajectory."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters plus three radial distortion coefficients."""

    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width):
            raise ValueError(f"cx={self.cx} outside [0, {self.width})")
        if not (0 <= self.cy < self.height):
            raise ValueError(f"cy={self.cy} outside [0, {self.height})")


@dataclass(frozen=True)
class MetricPoint:
    """A 3D point in meters in a camera frame (Z along the optical axis)."""

    X: float
    Y: float
    Z: float

    def __post_init__(self):
        if not (math.isfinite(self.X) and math.isfinite(self.Y) and math.isfinite(self.Z)):
            raise ValueError(f"non-finite metric point ({self.X}, {self.Y}, {self.Z})")

    def as_array(self) -> np.ndarray:
        return np.array([self.X, self.Y, self.Z], dtype=np.float64)


@dataclass(frozen=True)
class PixelCoord:
    """Continuous pixel coordinates, x rightward and y downward."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite pixel coordinate ({self.x}, {self.y})")


@dataclass(frozen=True)
class RadialTerms:
    """Normalized (ru) and distorted (rd) radial distances."""

    ru: float
    rd: float


@dataclass(frozen=True)
class RigidPose:
    """Rotation (unit quaternion) + translation in meters, with a timestamp."""

    timestamp: float
    rotation: tuple[float, float, float, float]  # (qw, qx, qy, qz)
    translation: tuple[float, float, float]

    def __post_init__(self):
        q = self.rotation
        n2 = q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]
        if n2 == 0.0 or not math.isfinite(n2):
            raise ValueError(f"degenerate quaternion {q}")
        if abs(n2 - 1.0) > _QUAT_NORM_TOL:
            n = math.sqrt(n2)
            object.__setattr__(self, "rotation", (q[0] / n, q[1] / n, q[2] / n, q[3] / n))
        object.__setattr__(self, "translation", tuple(float(v) for v in self.translation))

    def rotation_matrix(self) -> np.ndarray:
        w, x, y, z = self.rotation
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=np.float64,
        )


def identity_pose(timestamp: float = 0.0) -> RigidPose:
    return RigidPose(timestamp, (1.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0))


# ---------------------------------------------------------------------------
# quaternion helpers
# ---------------------------------------------------------------------------

def quat_multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_conjugate(q):
    return (q[0], -q[1], -q[2], -q[3])


def quat_from_axis_angle(axis, angle: float):
    ax, ay, az = axis
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    s = math.sin(angle / 2.0) / n
    return (math.cos(angle / 2.0), ax * s, ay * s, az * s)


def quat_rotate(q, v):
    """Rotate a 3-vector by a unit quaternion: v + 2w(u x v) + 2(u x (u x v))."""
    w = q[0]
    ux, uy, uz = q[1], q[2], q[3]
    cx = uy * v[2] - uz * v[1]
    cy = uz * v[0] - ux * v[2]
    cz = ux * v[1] - uy * v[0]
    ccx = uy * cz - uz * cy
    ccy = uz * cx - ux * cz
    ccz = ux * cy - uy * cx
    return (
        v[0] + 2.0 * (w * cx + ccx),
        v[1] + 2.0 * (w * cy + ccy),
        v[2] + 2.0 * (w * cz + ccz),
    )


def quat_slerp(q0, q1, u: float):
    """Spherical linear interpolation along the shorter arc."""
    dot = q0[0] * q1[0] + q0[1] * q1[1] + q0[2] * q1[2] + q0[3] * q1[3]
    if dot < 0.0:
        q1 = (-q1[0], -q1[1], -q1[2], -q1[3])
        dot = -dot
    if dot > 0.9995:
        # nearly parallel: nlerp is numerically safer than dividing by sin(theta)
        q = tuple(a + u * (b - a) for a, b in zip(q0, q1))
        n = math.sqrt(sum(c * c for c in q))
        return tuple(c / n for c in q)
    theta = math.acos(min(1.0, dot))
    s = math.sin(theta)
    w0 = math.sin((1.0 - u) * theta) / s
    w1 = math.sin(u * theta) / s
    return tuple(w0 * a + w1 * b for a, b in zip(q0, q1))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def radial_terms(p: MetricPoint, intr: CameraIntrinsics) -> RadialTerms:
    """Normalized and distorted radial distances for a point with Z > 0."""
    if p.Z <= 0:
        raise NonPositiveDepth(f"Z={p.Z} is not in front of the camera")
    ru = math.sqrt((p.X * p.X + p.Y * p.Y) / (p.Z * p.Z))
    # explicit products, not pow(): keeps scalar and batched paths bit-equal
    ru3 = ru * ru * ru
    ru5 = ru3 * ru * ru
    ru7 = ru5 * ru * ru
    rd = ru + intr.k1 * ru3 + intr.k2 * ru5 + intr.k3 * ru7
    return RadialTerms(ru=ru, rd=rd)


def project(p: MetricPoint, intr: CameraIntrinsics) -> PixelCoord:
    """Project a metric point to continuous pixel coordinates."""
    terms = radial_terms(p, intr)
    factor = terms.rd / terms.ru if terms.ru >= AXIS_EPS else 1.0
    return PixelCoord(
        x=p.X / p.Z * intr.fx * factor + intr.cx,
        y=p.Y / p.Z * intr.fy * factor + intr.cy,
    )


def project_points(points: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    """Vectorized projection of an (N, 3) array; caller guarantees Z > 0.

    Uses the same floating-point expressions as project() so the scalar
    and batched paths agree bit-for-bit.
    """
    pts = np.asarray(points, dtype=np.float64)
    X, Y, Z = pts[:, 0], pts[:, 1], pts[:, 2]
    ru = np.sqrt((X * X + Y * Y) / (Z * Z))
    ru3 = ru * ru * ru
    ru5 = ru3 * ru * ru
    ru7 = ru5 * ru * ru
    rd = ru + intr.k1 * ru3 + intr.k2 * ru5 + intr.k3 * ru7
    factor = np.ones_like(ru)
    ok = ru >= AXIS_EPS
    factor[ok] = rd[ok] / ru[ok]
    out = np.empty((pts.shape[0], 2), dtype=np.float64)
    out[:, 0] = X / Z * intr.fx * factor + intr.cx
    out[:, 1] = Y / Z * intr.fy * factor + intr.cy
    return out


def apply_pose(pose: RigidPose, p: MetricPoint) -> MetricPoint:
    """R @ p + t."""
    r = quat_rotate(pose.rotation, (p.X, p.Y, p.Z))
    t = pose.translation
    return MetricPoint(r[0] + t[0], r[1] + t[1], r[2] + t[2])


def apply_pose_to_array(pose: RigidPose, points: np.ndarray) -> np.ndarray:
    """Apply a pose to an (N, 3) array of points."""
    pts = np.asarray(points, dtype=np.float64)
    return pts @ pose.rotation_matrix().T + np.asarray(pose.translation)


def compose(a: RigidPose, b: RigidPose) -> RigidPose:
    """The pose applying b first, then a."""
    q = quat_multiply(a.rotation, b.rotation)
    t = quat_rotate(a.rotation, b.translation)
    ta = a.translation
    return RigidPose(a.timestamp, q, (t[0] + ta[0], t[1] + ta[1], t[2] + ta[2]))


def inverse(pose: RigidPose) -> RigidPose:
    qc = quat_conjugate(pose.rotation)
    t = quat_rotate(qc, pose.translation)
    return RigidPose(pose.timestamp, qc, (-t[0], -t[1], -t[2]))


def relative_pose(a: RigidPose, b: RigidPose) -> RigidPose:
    """The transform T = a^-1 . b mapping frame-b coordinates into frame a.

    Satisfies apply_pose(a, apply_pose(T, p)) == apply_pose(b, p).
    """
    return compose(inverse(a), b)


def interpolate_pose(trajectory: Sequence[RigidPose], t: float) -> RigidPose:
    """Pose at time t: lerp translation, slerp rotation, clamped endpoints.

    The trajectory must be non-empty with strictly increasing timestamps.
    A query exactly on a sample timestamp returns that sample.
    """
    if len(trajectory) == 0:
        raise EmptyTrajectory("cannot interpolate an empty trajectory")
    times = [p.timestamp for p in trajectory]
    if t <= times[0]:
        return RigidPose(t, trajectory[0].rotation, trajectory[0].translation)
    if t >= times[-1]:
        return RigidPose(t, trajectory[-1].rotation, trajectory[-1].translation)
    i = bisect_right(times, t) - 1
    a, b = trajectory[i], trajectory[i + 1]
    u = (t - a.timestamp) / (b.timestamp - a.timestamp)
    if u == 0.0:
        return a  # exact sample hit, bit-identical
    q = quat_slerp(a.rotation, b.rotation, u)
    ta, tb = a.translation, b.translation
    trans = tuple((1.0 - u) * x + u * y for x, y in zip(ta, tb))
    return RigidPose(t, q, trans)
