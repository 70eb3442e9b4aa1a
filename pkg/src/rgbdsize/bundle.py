"""On-disk frame bundle: one capture as a directory of plain files.

Layout (all files required unless noted):

    intrinsics.json   {"width","height","fx","fy","cx","cy","k1","k2","k3"}
    rgb.ppm           binary P6, maxval 255
    cloud.csv         header "X,Y,Z", one depth-frame point per line
    poses.json        {"trajectory":[{"t","tx","ty","tz","qw","qx","qy","qz"},...],
                       "depth_to_color":{same fields minus "t"}}
    meta.json         {"format_version":1,"t_rgb","t_depth"}
    detections.json   optional [{"label","score","x_min","y_min","x_max","y_max"}]

Poses are device-to-world; the cloud lives in the depth-camera frame at
t_depth. Floats are serialized with repr so save -> load -> save is
byte-identical.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .camera import CameraIntrinsics, RigidPose
from .segment import DetectionBox

FORMAT_VERSION = 1

REQUIRED_FILES = ("intrinsics.json", "rgb.ppm", "cloud.csv", "poses.json", "meta.json")


class BundleError(Exception):
    """Base class for bundle loading failures."""


class MissingFile(BundleError):
    def __init__(self, filename: str):
        self.filename = filename
        super().__init__(f"missing bundle file: {filename}")


class ParseError(BundleError):
    def __init__(self, filename: str, line: int, message: str):
        self.filename = filename
        self.line = line
        super().__init__(f"{filename}:{line}: {message}")


class InvariantViolation(BundleError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"invalid {field}: {message}")


@dataclass(frozen=True)
class FrameBundle:
    """One capture: RGB, sparse cloud, poses, timestamps, optional boxes."""

    intrinsics: CameraIntrinsics
    rgb: np.ndarray  # (H, W, 3) uint8
    cloud: np.ndarray  # (N, 3) float64, depth-camera frame
    trajectory: tuple[RigidPose, ...]  # device-to-world, increasing timestamps
    depth_to_color: RigidPose
    t_rgb: float
    t_depth: float
    detections: Optional[tuple[DetectionBox, ...]] = None
    dropped_rows: int = 0  # cloud rows discarded at load time (Z <= 0)

    def __post_init__(self):
        rgb = np.asarray(self.rgb, dtype=np.uint8)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise InvariantViolation("rgb", "image must be (H, W, 3)")
        if rgb.shape[0] != self.intrinsics.height or rgb.shape[1] != self.intrinsics.width:
            raise InvariantViolation(
                "rgb",
                f"image is {rgb.shape[1]}x{rgb.shape[0]} but intrinsics say "
                f"{self.intrinsics.width}x{self.intrinsics.height}",
            )
        cloud = np.asarray(self.cloud, dtype=np.float64).reshape(-1, 3)
        if cloud.size and not np.isfinite(cloud).all():
            raise InvariantViolation("cloud", "points must be finite")
        if len(self.trajectory) == 0:
            raise InvariantViolation("trajectory", "must contain at least one pose")
        times = [p.timestamp for p in self.trajectory]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvariantViolation("trajectory", "timestamps must be strictly increasing")
        object.__setattr__(self, "rgb", rgb)
        object.__setattr__(self, "cloud", cloud)
        object.__setattr__(self, "trajectory", tuple(self.trajectory))
        rgb.setflags(write=False)
        cloud.setflags(write=False)


# ---------------------------------------------------------------------------
# PPM
# ---------------------------------------------------------------------------

def write_ppm(path, rgb: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array as binary P6, maxval 255."""
    rgb = np.asarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("rgb must be (H, W, 3)")
    h, w = rgb.shape[:2]
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(rgb.tobytes())


def read_ppm(path) -> np.ndarray:
    """Read a binary P6 file written by write_ppm (comments tolerated)."""
    name = Path(path).name
    data = Path(path).read_bytes()

    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            ch = data[pos:pos + 1]
            if ch == b"#":  # comment runs to end of line
                while pos < len(data) and data[pos:pos + 1] not in (b"\n", b""):
                    pos += 1
            elif ch.isspace():
                pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError(name, 1, "truncated header")
        return data[start:pos]

    if token() != b"P6":
        raise ParseError(name, 1, "not a binary P6 file")
    try:
        w, h, maxval = int(token()), int(token()), int(token())
    except ValueError:
        raise ParseError(name, 1, "malformed header") from None
    if maxval != 255:
        raise ParseError(name, 2, f"maxval must be 255, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos:]
    if len(raster) != w * h * 3:
        raise ParseError(name, 3, f"expected {w * h * 3} raster bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3).copy()


# ---------------------------------------------------------------------------
# save
# ---------------------------------------------------------------------------

def _pose_dict(pose: RigidPose, with_time: bool) -> dict:
    d = {}
    if with_time:
        d["t"] = float(pose.timestamp)
    d["tx"], d["ty"], d["tz"] = (float(v) for v in pose.translation)
    d["qw"], d["qx"], d["qy"], d["qz"] = (float(v) for v in pose.rotation)
    return d


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def save_bundle(bundle: FrameBundle, path) -> None:
    """Write a bundle directory; output bytes are deterministic."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    intr = bundle.intrinsics
    _write_json(root / "intrinsics.json", {
        "width": intr.width, "height": intr.height,
        "fx": float(intr.fx), "fy": float(intr.fy),
        "cx": float(intr.cx), "cy": float(intr.cy),
        "k1": float(intr.k1), "k2": float(intr.k2), "k3": float(intr.k3),
    })
    write_ppm(root / "rgb.ppm", bundle.rgb)
    lines = ["X,Y,Z"]
    lines.extend(f"{x!r},{y!r},{z!r}" for x, y, z in bundle.cloud.tolist())
    (root / "cloud.csv").write_text("\n".join(lines) + "\n")
    _write_json(root / "poses.json", {
        "trajectory": [_pose_dict(p, with_time=True) for p in bundle.trajectory],
        "depth_to_color": _pose_dict(bundle.depth_to_color, with_time=False),
    })
    _write_json(root / "meta.json", {
        "format_version": FORMAT_VERSION,
        "t_rgb": float(bundle.t_rgb),
        "t_depth": float(bundle.t_depth),
    })
    if bundle.detections is not None:
        _write_json(root / "detections.json", [
            {
                "label": b.label, "score": float(b.score),
                "x_min": float(b.x_min), "y_min": float(b.y_min),
                "x_max": float(b.x_max), "y_max": float(b.y_max),
            }
            for b in bundle.detections
        ])


# ---------------------------------------------------------------------------
# load
# ---------------------------------------------------------------------------

def _read_json(root: Path, name: str):
    p = root / name
    if not p.is_file():
        raise MissingFile(name)
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(name, e.lineno, e.msg) from None


def _field(obj: dict, name: str, filename: str):
    if name not in obj:
        raise ParseError(filename, 0, f"missing field {name!r}")
    return obj[name]


def _load_pose(obj: dict, filename: str, with_time: bool) -> RigidPose:
    t = float(_field(obj, "t", filename)) if with_time else 0.0
    trans = tuple(float(_field(obj, k, filename)) for k in ("tx", "ty", "tz"))
    quat = tuple(float(_field(obj, k, filename)) for k in ("qw", "qx", "qy", "qz"))
    try:
        return RigidPose(timestamp=t, rotation=quat, translation=trans)
    except ValueError as e:
        raise InvariantViolation("pose", str(e)) from None


def _load_cloud(root: Path) -> tuple[np.ndarray, int]:
    p = root / "cloud.csv"
    if not p.is_file():
        raise MissingFile("cloud.csv")
    text = p.read_text()
    lines = text.splitlines()
    if not lines or lines[0].strip() != "X,Y,Z":
        raise ParseError("cloud.csv", 1, 'expected header "X,Y,Z"')
    rows = np.empty((len(lines) - 1, 3), dtype=np.float64)
    n = 0
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError("cloud.csv", i, f"expected 3 columns, got {len(parts)}")
        try:
            rows[n, 0] = float(parts[0])
            rows[n, 1] = float(parts[1])
            rows[n, 2] = float(parts[2])
        except ValueError:
            raise ParseError("cloud.csv", i, f"bad number in {line!r}") from None
        n += 1
    rows = rows[:n]
    if rows.size and not np.isfinite(rows).all():
        raise InvariantViolation("cloud", "points must be finite")
    keep = rows[:, 2] > 0
    dropped = int((~keep).sum())
    if dropped:
        warnings.warn(f"cloud.csv: dropped {dropped} rows with Z <= 0", stacklevel=2)
    return rows[keep], dropped


def load_bundle(path) -> FrameBundle:
    """Parse a bundle directory, validating every type invariant."""
    root = Path(path)
    if not root.is_dir():
        raise MissingFile(str(path))

    intr_obj = _read_json(root, "intrinsics.json")
    vals = {k: _field(intr_obj, k, "intrinsics.json")
            for k in ("width", "height", "fx", "fy", "cx", "cy", "k1", "k2", "k3")}
    try:
        intr = CameraIntrinsics(
            width=int(vals["width"]), height=int(vals["height"]),
            fx=float(vals["fx"]), fy=float(vals["fy"]),
            cx=float(vals["cx"]), cy=float(vals["cy"]),
            k1=float(vals["k1"]), k2=float(vals["k2"]), k3=float(vals["k3"]),
        )
    except ValueError as e:
        raise InvariantViolation("intrinsics", str(e)) from None

    if not (root / "rgb.ppm").is_file():
        raise MissingFile("rgb.ppm")
    rgb = read_ppm(root / "rgb.ppm")

    cloud, dropped = _load_cloud(root)

    poses_obj = _read_json(root, "poses.json")
    traj_list = _field(poses_obj, "trajectory", "poses.json")
    if not isinstance(traj_list, list) or not traj_list:
        raise ParseError("poses.json", 0, "trajectory must be a non-empty list")
    trajectory = tuple(_load_pose(p, "poses.json", with_time=True) for p in traj_list)
    extrinsic = _load_pose(_field(poses_obj, "depth_to_color", "poses.json"),
                           "poses.json", with_time=False)

    meta = _read_json(root, "meta.json")
    version = _field(meta, "format_version", "meta.json")
    if version != FORMAT_VERSION:
        raise ParseError("meta.json", 0, f"unsupported format_version {version!r}")
    t_rgb = float(_field(meta, "t_rgb", "meta.json"))
    t_depth = float(_field(meta, "t_depth", "meta.json"))

    detections = None
    if (root / "detections.json").is_file():
        det_obj = _read_json(root, "detections.json")
        if not isinstance(det_obj, list):
            raise ParseError("detections.json", 0, "expected a list of boxes")
        boxes = []
        for d in det_obj:
            try:
                boxes.append(DetectionBox(
                    label=str(_field(d, "label", "detections.json")),
                    score=float(_field(d, "score", "detections.json")),
                    x_min=float(_field(d, "x_min", "detections.json")),
                    y_min=float(_field(d, "y_min", "detections.json")),
                    x_max=float(_field(d, "x_max", "detections.json")),
                    y_max=float(_field(d, "y_max", "detections.json")),
                ))
            except ValueError as e:
                raise InvariantViolation("detections", str(e)) from None
        detections = tuple(boxes)

    return FrameBundle(
        intrinsics=intr,
        rgb=rgb,
        cloud=cloud,
        trajectory=trajectory,
        depth_to_color=extrinsic,
        t_rgb=t_rgb,
        t_depth=t_depth,
        detections=detections,
        dropped_rows=dropped,
    )
