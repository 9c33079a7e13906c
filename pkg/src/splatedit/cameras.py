"""Pinhole cameras, the editing trajectory, and box-to-mask projection.

Conventions (used by every fixture in this repo):

* Camera frame is OpenCV style: +x right, +y down, +z forward into the
  scene.  ``world_to_camera`` maps world points p to camera points
  ``R @ p + t``.
* World up and the box's local vertical axis are the rotated local +z.
* Pixel (row, col) samples the continuous image point
  (col + 0.5, row + 0.5); projection is x = fx*X/Z + cx, y = fy*Y/Z + cy.
* Trajectory azimuth 0 lies along the box's local +x axis and grows
  counterclockwise when seen from above (+z).  ``side="left"`` spans
  azimuths [0, arc], ``"right"`` spans [-arc, 0], ``"full"`` is centered
  on 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import ParameterError

NEAR_CLIP = 0.2  # world units; splats and box corners closer than this are clipped


def quat_to_matrix(q: NDArray) -> NDArray[np.float64]:
    """Rotation matrix from (w, x, y, z) quaternion(s); normalizes first.

    Accepts shape (4,) or (N, 4); returns (3, 3) or (N, 3, 3).
    """
    q = np.asarray(q, dtype=np.float64)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    q = q / np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    m = np.empty((len(q), 3, 3))
    m[:, 0, 0] = 1 - 2 * (y * y + z * z)
    m[:, 0, 1] = 2 * (x * y - z * w)
    m[:, 0, 2] = 2 * (x * z + y * w)
    m[:, 1, 0] = 2 * (x * y + z * w)
    m[:, 1, 1] = 1 - 2 * (x * x + z * z)
    m[:, 1, 2] = 2 * (y * z - x * w)
    m[:, 2, 0] = 2 * (x * z - y * w)
    m[:, 2, 1] = 2 * (y * z + x * w)
    m[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return m[0] if single else m


@dataclass
class Camera:
    """Pinhole intrinsics plus a rigid world-to-camera pose."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: NDArray[np.float64]     # (3, 3), world-to-camera
    translation: NDArray[np.float64]  # (3,)

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        self.validate()

    def validate(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ParameterError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ParameterError("image size must be at least 1x1")
        eye = self.rotation @ self.rotation.T
        if not np.allclose(eye, np.eye(3), atol=1e-6):
            raise ParameterError("camera rotation is not orthonormal")
        if np.linalg.det(self.rotation) < 0:
            raise ParameterError("camera rotation must have determinant +1")

    @property
    def position(self) -> NDArray[np.float64]:
        """Camera center in world coordinates."""
        return -self.rotation.T @ self.translation

    @property
    def forward(self) -> NDArray[np.float64]:
        """World-space +z (viewing) direction."""
        return self.rotation[2]

    def world_to_cam(self, pts: NDArray) -> NDArray[np.float64]:
        pts = np.asarray(pts, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def project(self, pts_cam: NDArray) -> NDArray[np.float64]:
        """Perspective projection of camera-space points to pixel coords."""
        pts_cam = np.asarray(pts_cam, dtype=np.float64)
        z = pts_cam[..., 2]
        return np.stack([self.fx * pts_cam[..., 0] / z + self.cx,
                         self.fy * pts_cam[..., 1] / z + self.cy], axis=-1)

    def to_json_dict(self) -> dict:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height,
                "world_to_camera": m.tolist()}

    @staticmethod
    def from_json_dict(d: dict) -> "Camera":
        m = np.asarray(d["world_to_camera"], dtype=np.float64).reshape(4, 4)
        return Camera(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                      int(d["width"]), int(d["height"]), m[:3, :3], m[:3, 3])


def save_cameras_json(cameras: list[Camera], path: str | Path) -> None:
    Path(path).write_text(json.dumps([c.to_json_dict() for c in cameras], indent=2))


def load_cameras_json(path: str | Path) -> list[Camera]:
    return [Camera.from_json_dict(d) for d in json.loads(Path(path).read_text())]


@dataclass
class OrientedBBox:
    """User-placed rotated cuboid marking the editing region."""

    center: NDArray[np.float64]        # (3,)
    half_extents: NDArray[np.float64]  # (3,) strictly positive
    rotation: NDArray[np.float64]      # (4,) unit quaternion (w, x, y, z)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64).reshape(3)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64).reshape(3)
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        if np.any(self.half_extents <= 0):
            raise ParameterError("half_extents must be strictly positive")
        n = np.linalg.norm(self.rotation)
        if not np.isfinite(n) or n < 1e-12:
            raise ParameterError("degenerate bbox quaternion")
        if abs(n - 1.0) > 1e-9:  # keep already-unit quaternions bit-exact
            self.rotation = self.rotation / n

    @property
    def rotation_matrix(self) -> NDArray[np.float64]:
        return quat_to_matrix(self.rotation)

    @property
    def up_axis(self) -> NDArray[np.float64]:
        """World direction of the box's local vertical (+z) axis."""
        return self.rotation_matrix[:, 2]

    def corners(self) -> NDArray[np.float64]:
        """The 8 corners, (8, 3) world coordinates."""
        signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
                         dtype=np.float64)
        local = signs * self.half_extents
        return local @ self.rotation_matrix.T + self.center

    def to_json_dict(self) -> dict:
        return {"center": self.center.tolist(),
                "half_extents": self.half_extents.tolist(),
                "rotation_wxyz": self.rotation.tolist()}

    @staticmethod
    def from_json_dict(d: dict) -> "OrientedBBox":
        return OrientedBBox(np.asarray(d["center"], dtype=np.float64),
                            np.asarray(d["half_extents"], dtype=np.float64),
                            np.asarray(d["rotation_wxyz"], dtype=np.float64))


def save_bbox_json(bbox: OrientedBBox, path: str | Path) -> None:
    Path(path).write_text(json.dumps(bbox.to_json_dict(), indent=2))


def load_bbox_json(path: str | Path) -> OrientedBBox:
    return OrientedBBox.from_json_dict(json.loads(Path(path).read_text()))


@dataclass
class TrajectorySpec:
    """Circular editing trajectory around the box's vertical axis."""

    n_views: int = 14
    arc_degrees: float = 120.0
    radius: float | None = None          # default: 2.5 * max(half_extents)
    elevation_degrees: float = 15.0
    side: str = "left"                   # left | right | full
    fx: float = 128.0
    fy: float = 128.0
    width: int = 128
    height: int = 128

    def __post_init__(self):
        if self.n_views < 2:
            raise ParameterError("n_views must be >= 2")
        if not (0 < self.arc_degrees <= 360):
            raise ParameterError("arc_degrees must lie in (0, 360]")
        if self.side not in ("left", "right", "full"):
            raise ParameterError(f"unknown side {self.side!r}")
        if self.radius is not None and self.radius <= 0:
            raise ParameterError("radius must be positive")


def look_at(position: NDArray, target: NDArray, up: NDArray,
            fx: float, fy: float, width: int, height: int) -> Camera:
    """Camera at `position` whose +z axis points exactly at `target`."""
    position = np.asarray(position, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    f = target - position
    nf = np.linalg.norm(f)
    if nf < 1e-12:
        raise ParameterError("camera position coincides with look-at target")
    f = f / nf
    r = np.cross(f, np.asarray(up, dtype=np.float64))
    nr = np.linalg.norm(r)
    if nr < 1e-9:  # looking straight along up: pick any perpendicular
        alt = np.array([1.0, 0.0, 0.0]) if abs(f[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        r = np.cross(f, alt)
        nr = np.linalg.norm(r)
    r = r / nr
    d = np.cross(f, r)  # image-down, completes the right-handed frame
    rot = np.stack([r, d, f])
    return Camera(fx, fy, width / 2.0, height / 2.0, width, height,
                  rot, -rot @ position)


def make_trajectory(bbox: OrientedBBox, spec: TrajectorySpec) -> list[Camera]:
    """Uniformly spaced look-at cameras on a circle around the box.

    Centers lie on a circle of radius ``spec.radius`` in the plane
    perpendicular to the box's local vertical axis, lifted along that
    axis by ``radius * tan(elevation)``; every camera's forward axis
    points at ``bbox.center``.  Azimuth spacing is arc/(n-1) inclusive
    of both endpoints.
    """
    radius = spec.radius if spec.radius is not None else 2.5 * float(np.max(bbox.half_extents))
    if radius <= 0:
        raise ParameterError("radius must be positive")
    if spec.side == "left":
        start, stop = 0.0, np.radians(spec.arc_degrees)
    elif spec.side == "right":
        start, stop = -np.radians(spec.arc_degrees), 0.0
    else:
        half = np.radians(spec.arc_degrees) / 2.0
        start, stop = -half, half
    azimuths = np.linspace(start, stop, spec.n_views)
    lift = radius * np.tan(np.radians(spec.elevation_degrees))
    rot = bbox.rotation_matrix
    up = rot[:, 2]
    cams = []
    for az in azimuths:
        local = np.array([radius * np.cos(az), radius * np.sin(az), lift])
        pos = bbox.center + rot @ local
        cams.append(look_at(pos, bbox.center, up,
                            spec.fx, spec.fy, spec.width, spec.height))
    return cams


def central_camera(trajectory: list[Camera]) -> Camera:
    """The conditioning viewpoint: element floor((len - 1) / 2)."""
    if not trajectory:
        raise ParameterError("trajectory is empty")
    return trajectory[central_index(len(trajectory))]


def central_index(n: int) -> int:
    if n < 1:
        raise ParameterError("trajectory is empty")
    return (n - 1) // 2


def point_in_bbox(bbox: OrientedBBox, p: NDArray) -> bool | NDArray[np.bool_]:
    """True where the box-local coordinates of p fall within the extents.

    Accepts a single point (3,) or a batch (N, 3).
    """
    p = np.asarray(p, dtype=np.float64)
    local = (p - bbox.center) @ bbox.rotation_matrix  # R^T (p - c), row convention
    inside = np.all(np.abs(local) <= bbox.half_extents, axis=-1)
    return bool(inside) if p.ndim == 1 else inside


def _convex_hull_2d(pts: NDArray[np.float64]) -> NDArray[np.float64]:
    """Monotone-chain hull, counterclockwise, degenerate-input tolerant."""
    pts = np.unique(np.asarray(pts, dtype=np.float64), axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def turn(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def half(seq):
        out: list[NDArray] = []
        for p in seq:
            while len(out) >= 2 and turn(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return np.asarray(lower[:-1] + upper[:-1])


def project_bbox_mask(bbox: OrientedBBox, camera: Camera) -> NDArray[np.bool_]:
    """Binary (height, width) editing mask of the box seen from `camera`.

    A pixel is set iff its center lies inside the convex hull of the
    projected box corners; edges crossing the near plane are clipped at
    z = NEAR_CLIP before projection.  A box entirely behind the camera
    yields an all-zero mask.
    """
    corners_cam = camera.world_to_cam(bbox.corners())
    front = corners_cam[:, 2] > NEAR_CLIP
    pts = [corners_cam[i] for i in range(8) if front[i]]
    if not pts and not front.any():
        return np.zeros((camera.height, camera.width), dtype=bool)
    # box edges: indices differing in exactly one sign bit
    edges = [(i, j) for i in range(8) for j in range(i + 1, 8)
             if bin(i ^ j).count("1") == 1]
    for i, j in edges:
        if front[i] != front[j]:
            a, b = corners_cam[i], corners_cam[j]
            t = (NEAR_CLIP - a[2]) / (b[2] - a[2])
            pts.append(a + t * (b - a))
    if len(pts) < 3:
        return np.zeros((camera.height, camera.width), dtype=bool)
    proj = camera.project(np.asarray(pts))
    hull = _convex_hull_2d(proj)
    if len(hull) < 3:
        return np.zeros((camera.height, camera.width), dtype=bool)

    xs = np.arange(camera.width) + 0.5
    ys = np.arange(camera.height) + 0.5
    px, py = np.meshgrid(xs, ys)
    mask = np.ones((camera.height, camera.width), dtype=bool)
    for k in range(len(hull)):
        a = hull[k]
        b = hull[(k + 1) % len(hull)]
        # hull is CCW; interior satisfies cross(b-a, p-a) >= 0
        mask &= (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0]) >= 0
    return mask


def bbox_mask_rect(bbox: OrientedBBox, camera: Camera) -> NDArray[np.bool_]:
    """Dilated variant: axis-aligned bounding rectangle of the hull mask.

    Mirrors the square-mask statistics some inpainting models are
    trained with; empty input stays empty.
    """
    mask = project_bbox_mask(bbox, camera)
    if not mask.any():
        return mask
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    rect = np.zeros_like(mask)
    rect[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1] = True
    return rect
