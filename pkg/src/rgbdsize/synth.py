"""Synthetic scene generator with analytic ground truth.

Scenes are a fronto-parallel background plane plus axis-aligned
rectangular boxes facing the camera, rendered in flat colors. The
emitted sparse cloud samples the true surfaces on a regular pixel grid
(one return per stride x stride cell), optionally thinned by dropout
and perturbed by Gaussian range noise applied along the viewing ray.

The bundle carries a genuinely moving device trajectory and a nonzero
depth-to-color extrinsic: the cloud is expressed in the depth-camera
frame at t_depth, so consumers must perform the full spatio-temporal
alignment to recover the color-frame geometry. Ground truth (object
dimensions and pixel footprints) is defined in the color frame at t_rgb
and is exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import FrameBundle
from .camera import (
    CameraIntrinsics,
    RigidPose,
    compose,
    interpolate_pose,
    inverse,
    quat_from_axis_angle,
    relative_pose,
    apply_pose_to_array,
)
from .segment import DetectionBox

BACKGROUND_COLOR = (204, 204, 204)
OBJECT_PALETTE = (
    (214, 69, 65),
    (65, 131, 215),
    (63, 195, 128),
    (244, 179, 80),
    (154, 89, 181),
    (54, 215, 183),
)

# Handheld-style capture motion (device-to-world): a slow drift with a
# slight rotation, sampled at three instants that bracket both captures.
_TRAJ_T0 = 10.0
_TRAJ_DT = 0.1
_DRIFT_VELOCITY = (0.10, 0.02, -0.04)  # m/s
_SPIN_AXIS = (0.3, 1.0, 0.2)
_SPIN_RATE = 0.07  # rad/s
T_DEPTH = _TRAJ_T0 + 0.04
T_RGB = _TRAJ_T0 + 0.13

# Depth camera sits a touch off the color camera on the device.
DEPTH_TO_COLOR = RigidPose(
    timestamp=0.0,
    rotation=quat_from_axis_angle((0.0, 1.0, 0.0), 0.006),
    translation=(0.016, -0.007, 0.003),
)


class SpecInvalid(ValueError):
    """Raised when a SceneSpec violates its own constraints."""


@dataclass(frozen=True)
class BoxObject:
    """Fronto-parallel rectangle facing the camera.

    center_x/center_y are meters in the color frame at the object's
    depth; width spans X and height spans Y.
    """

    label: str
    center_x: float
    center_y: float
    width: float
    height: float
    depth: float


@dataclass(frozen=True)
class SceneSpec:
    intrinsics: CameraIntrinsics
    background_depth: float
    objects: tuple[BoxObject, ...] = ()
    sample_stride: int = 10
    dropout: float = 0.0
    noise_sigma: float = 0.0
    rng_seed: int = 0
    white_on_white: bool = False  # render everything white (Fig.-3-style scene)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.background_depth <= 0:
            raise SpecInvalid("background_depth must be positive")
        for obj in self.objects:
            if obj.width <= 0 or obj.height <= 0:
                raise SpecInvalid(f"object {obj.label!r} has non-positive size")
            if not (0 < obj.depth < self.background_depth):
                raise SpecInvalid(
                    f"object {obj.label!r} depth {obj.depth} must lie in "
                    f"(0, {self.background_depth})"
                )
        if not (0.0 <= self.dropout < 1.0):
            raise SpecInvalid(f"dropout must be in [0, 1), got {self.dropout}")
        if self.noise_sigma < 0:
            raise SpecInvalid("noise_sigma must be >= 0")
        if self.sample_stride < 1:
            raise SpecInvalid("sample_stride must be >= 1")


@dataclass(frozen=True)
class ObjectTruth:
    label: str
    height: float  # meters
    width: float  # meters
    depth: float  # meters from camera
    footprint: np.ndarray  # (H, W) bool, exact pixel coverage

    def bounding_box(self, margin: float = 10.0, score: float = 1.0) -> DetectionBox:
        """Detection box around the footprint, padded by margin pixels."""
        rows, cols = np.nonzero(self.footprint)
        if rows.size == 0:
            raise ValueError(f"object {self.label!r} has an empty footprint")
        return DetectionBox(
            label=self.label,
            score=score,
            x_min=float(cols.min()) - margin,
            y_min=float(rows.min()) - margin,
            x_max=float(cols.max()) + margin,
            y_max=float(rows.max()) + margin,
        )


@dataclass(frozen=True)
class GroundTruth:
    objects: tuple[ObjectTruth, ...]
    background_depth: float


def _undistort_radius(rd: np.ndarray, k1: float, k2: float, k3: float) -> np.ndarray:
    """Invert rd = ru + k1 ru^3 + k2 ru^5 + k3 ru^7 by Newton iteration."""
    ru = rd.copy()
    for _ in range(30):
        r2 = ru * ru
        f = ru * (1.0 + r2 * (k1 + r2 * (k2 + r2 * k3))) - rd
        fp = 1.0 + r2 * (3.0 * k1 + r2 * (5.0 * k2 + r2 * 7.0 * k3))
        if np.any(fp <= 0):
            raise SpecInvalid("distortion model is not invertible over the image")
        ru = ru - f / fp
    return ru


def pixel_rays(intr: CameraIntrinsics) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel ray slopes (u, v) = (X/Z, Y/Z), undistorting if needed."""
    a = (np.arange(intr.width, dtype=np.float64) - intr.cx) / intr.fx
    b = (np.arange(intr.height, dtype=np.float64) - intr.cy) / intr.fy
    A, B = np.meshgrid(a, b)
    if intr.k1 == 0.0 and intr.k2 == 0.0 and intr.k3 == 0.0:
        return A, B
    rd = np.sqrt(A * A + B * B)
    ru = _undistort_radius(rd, intr.k1, intr.k2, intr.k3)
    scale = np.ones_like(rd)
    nz = rd > 0
    scale[nz] = ru[nz] / rd[nz]
    return A * scale, B * scale


def make_trajectory() -> tuple[RigidPose, ...]:
    poses = []
    for i in range(3):
        dt = i * _TRAJ_DT
        poses.append(RigidPose(
            timestamp=_TRAJ_T0 + dt,
            rotation=quat_from_axis_angle(_SPIN_AXIS, _SPIN_RATE * dt),
            translation=tuple(v * dt for v in _DRIFT_VELOCITY),
        ))
    return tuple(poses)


def generate(spec: SceneSpec) -> tuple[FrameBundle, GroundTruth]:
    """Render a scene spec into a frame bundle plus its ground truth.

    Deterministic for a fixed rng_seed, down to the emitted bytes.
    """
    intr = spec.intrinsics
    W, H = intr.width, intr.height
    u, v = pixel_rays(intr)

    # exact footprints; the nearest surface claims contested pixels
    claimed = np.zeros((H, W), dtype=bool)
    zfield = np.full((H, W), spec.background_depth, dtype=np.float64)
    footprints: list[np.ndarray] = [None] * len(spec.objects)
    for i in sorted(range(len(spec.objects)), key=lambda j: spec.objects[j].depth):
        obj = spec.objects[i]
        hit = (
            (np.abs(u * obj.depth - obj.center_x) <= obj.width / 2.0)
            & (np.abs(v * obj.depth - obj.center_y) <= obj.height / 2.0)
            & ~claimed
        )
        claimed |= hit
        zfield[hit] = obj.depth
        footprints[i] = hit

    rgb = np.empty((H, W, 3), dtype=np.uint8)
    if spec.white_on_white:
        rgb[:] = 255
    else:
        rgb[:] = BACKGROUND_COLOR
        for i, fp in enumerate(footprints):
            rgb[fp] = OBJECT_PALETTE[i % len(OBJECT_PALETTE)]

    # stride-grid depth samples, thinned by dropout, range noise on the ray
    off = spec.sample_stride // 2
    cols = np.arange(off, W, spec.sample_stride)
    rows = np.arange(off, H, spec.sample_stride)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    rr, cc = rr.ravel(), cc.ravel()
    rng = np.random.default_rng(spec.rng_seed)
    if spec.dropout > 0:
        keep = rng.random(rr.size) >= spec.dropout
        rr, cc = rr[keep], cc[keep]
    z = zfield[rr, cc]
    if spec.noise_sigma > 0:
        z = z + rng.normal(0.0, spec.noise_sigma, z.size)
        ok = z > 0  # a return pushed behind the sensor is no return at all
        rr, cc, z = rr[ok], cc[ok], z[ok]
    color_points = np.column_stack((u[rr, cc] * z, v[rr, cc] * z, z))

    trajectory = make_trajectory()
    pose_rgb = interpolate_pose(trajectory, T_RGB)
    pose_depth = interpolate_pose(trajectory, T_DEPTH)
    align = compose(DEPTH_TO_COLOR, relative_pose(pose_rgb, pose_depth))
    cloud = apply_pose_to_array(inverse(align), color_points)

    bundle = FrameBundle(
        intrinsics=intr,
        rgb=rgb,
        cloud=cloud,
        trajectory=trajectory,
        depth_to_color=DEPTH_TO_COLOR,
        t_rgb=T_RGB,
        t_depth=T_DEPTH,
        detections=None,
    )
    truth = GroundTruth(
        objects=tuple(
            ObjectTruth(
                label=obj.label,
                height=obj.height,
                width=obj.width,
                depth=obj.depth,
                footprint=footprints[i],
            )
            for i, obj in enumerate(spec.objects)
        ),
        background_depth=spec.background_depth,
    )
    return bundle, truth
