"""Gaussian scene container and PLY serialization.

A scene is a flat array-of-structs over Gaussians:

=============== ========================= ======================================
field           shape (float32)           meaning
=============== ========================= ======================================
positions       (N, 3)                    center, world units
rotations       (N, 4)                    unit quaternion (w, x, y, z)
log_scales      (N, 3)                    log of per-axis std dev, world units
opacity_logits  (N,)                      opacity = sigmoid(logit)
sh_coeffs       (N, (L+1)**2, 3)          spherical-harmonic color coefficients
=============== ========================= ======================================

Serialization is bit-compatible with the widely used Gaussian Splatting
PLY exporter: binary little-endian, one ``vertex`` element whose float32
properties appear in the canonical order

    x y z nx ny nz f_dc_0..2 f_rest_0..(3*((L+1)^2-1)-1) opacity
    scale_0..2 rot_0..3

``nx ny nz`` are written as zeros and ignored on load.  ``f_rest`` holds
the higher-degree SH coefficients channel-major (all red coefficients,
then green, then blue), matching that exporter.  Color convention:
``rgb = 0.5 + SH_C0 * f_dc`` for the degree-0 term.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import ParameterError, PlyFormatError, SceneDataError

SH_C0 = 0.28209479177387814

_HEADER_FIELDS_FIXED_PRE = ("x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2")
_HEADER_FIELDS_FIXED_POST = ("opacity", "scale_0", "scale_1", "scale_2",
                             "rot_0", "rot_1", "rot_2", "rot_3")


def _as_f32(a, shape_tail) -> NDArray[np.float32]:
    arr = np.ascontiguousarray(a, dtype=np.float32)
    if arr.ndim == len(shape_tail):
        arr = arr[None] if arr.size else arr.reshape((0,) + shape_tail)
    return arr


@dataclass
class GaussianScene:
    """Parameter set of a 3D Gaussian Splatting scene."""

    positions: NDArray[np.float32]
    rotations: NDArray[np.float32]
    log_scales: NDArray[np.float32]
    opacity_logits: NDArray[np.float32]
    sh_coeffs: NDArray[np.float32]

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float32).reshape(-1, 3)
        self.rotations = np.ascontiguousarray(self.rotations, dtype=np.float32).reshape(-1, 4)
        self.log_scales = np.ascontiguousarray(self.log_scales, dtype=np.float32).reshape(-1, 3)
        self.opacity_logits = np.ascontiguousarray(self.opacity_logits, dtype=np.float32).reshape(-1)
        sh = np.ascontiguousarray(self.sh_coeffs, dtype=np.float32)
        if sh.ndim == 2:  # (N, 3) flat RGB coefficients -> degree 0
            sh = sh[:, None, :]
        n = len(self.positions)
        if sh.size == 0:
            k = sh.shape[1] if sh.ndim == 3 and sh.shape[1] > 0 else 1
            self.sh_coeffs = sh.reshape(0, k, 3)
        else:
            self.sh_coeffs = sh.reshape(n, -1, 3)
        for name in ("rotations", "log_scales", "opacity_logits", "sh_coeffs"):
            if len(getattr(self, name)) != n:
                raise ParameterError(f"{name} has {len(getattr(self, name))} rows, expected {n}")

    @property
    def count(self) -> int:
        return len(self.positions)

    @property
    def sh_degree(self) -> int:
        return int(round(np.sqrt(self.sh_coeffs.shape[1]))) - 1

    def opacities(self) -> NDArray[np.float64]:
        """Opacities in (0, 1), i.e. sigmoid of the stored logits."""
        return 1.0 / (1.0 + np.exp(-self.opacity_logits.astype(np.float64)))

    def scales(self) -> NDArray[np.float64]:
        return np.exp(self.log_scales.astype(np.float64))

    def base_colors(self) -> NDArray[np.float64]:
        """RGB from the degree-0 SH term, clamped to [0, 1]."""
        rgb = 0.5 + SH_C0 * self.sh_coeffs[:, 0, :].astype(np.float64)
        return np.clip(rgb, 0.0, 1.0)

    def normalize_rotations(self, atol: float = 0.0) -> None:
        """Renormalize quaternions in place (call after any mutation).

        Rows already within `atol` of unit norm are left bit-untouched,
        which keeps freshly loaded files byte-stable on resave.
        """
        norms = np.linalg.norm(self.rotations.astype(np.float64), axis=1, keepdims=True)
        if np.any(norms < 1e-12):
            raise SceneDataError("zero-norm quaternion")
        needs = (np.abs(norms - 1.0) > atol)[:, 0]
        if needs.any():
            fixed = (self.rotations[needs].astype(np.float64) / norms[needs]).astype(np.float32)
            self.rotations = self.rotations.copy()
            self.rotations[needs] = fixed

    def validate(self) -> None:
        """Raise SceneDataError on NaN/Inf or broken invariants."""
        for name in ("positions", "rotations", "log_scales", "opacity_logits", "sh_coeffs"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                idx = int(np.argwhere(~np.isfinite(arr.reshape(len(arr), -1)).all(axis=1))[0, 0]) \
                    if len(arr) else -1
                raise SceneDataError(f"non-finite value in {name} at index {idx}")
        if self.count:
            norms = np.linalg.norm(self.rotations.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise SceneDataError("quaternion norm deviates from 1 by more than 1e-6")

    def copy(self) -> "GaussianScene":
        return GaussianScene(self.positions.copy(), self.rotations.copy(),
                             self.log_scales.copy(), self.opacity_logits.copy(),
                             self.sh_coeffs.copy())

    @staticmethod
    def empty(sh_degree: int = 0) -> "GaussianScene":
        k = (sh_degree + 1) ** 2
        return GaussianScene(np.zeros((0, 3)), np.zeros((0, 4)), np.zeros((0, 3)),
                             np.zeros((0,)), np.zeros((0, k, 3)))

    @staticmethod
    def concatenate(a: "GaussianScene", b: "GaussianScene") -> "GaussianScene":
        if a.sh_coeffs.shape[1] != b.sh_coeffs.shape[1]:
            raise ParameterError("cannot concatenate scenes of different SH degree")
        return GaussianScene(
            np.concatenate([a.positions, b.positions]),
            np.concatenate([a.rotations, b.rotations]),
            np.concatenate([a.log_scales, b.log_scales]),
            np.concatenate([a.opacity_logits, b.opacity_logits]),
            np.concatenate([a.sh_coeffs, b.sh_coeffs]),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, GaussianScene):
            return NotImplemented
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("positions", "rotations", "log_scales", "opacity_logits", "sh_coeffs"))


@dataclass
class PointCloudSample:
    """Downsampled scene centers with flat RGB colors, for the placement UI."""

    points: NDArray[np.float64]  # (M, 3)
    colors: NDArray[np.float64]  # (M, 3) in [0, 1]

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.colors = np.asarray(self.colors, dtype=np.float64).reshape(-1, 3)
        if len(self.points) != len(self.colors):
            raise ParameterError("points and colors must have equal length")

    def to_json_dict(self) -> dict:
        return {"points": self.points.tolist(), "colors": self.colors.tolist()}

    @staticmethod
    def from_json_dict(d: dict) -> "PointCloudSample":
        return PointCloudSample(np.asarray(d["points"], dtype=np.float64).reshape(-1, 3),
                                np.asarray(d["colors"], dtype=np.float64).reshape(-1, 3))


def _ply_field_names(n_rest: int) -> list[str]:
    rest = [f"f_rest_{i}" for i in range(n_rest)]
    return list(_HEADER_FIELDS_FIXED_PRE) + rest + list(_HEADER_FIELDS_FIXED_POST)


def ply_bytes(scene: GaussianScene) -> bytes:
    """The scene serialized in the canonical binary little-endian layout."""
    scene.validate()
    n = scene.count
    k = scene.sh_coeffs.shape[1] if n else (scene.sh_degree + 1) ** 2
    n_rest = 3 * (k - 1)
    names = _ply_field_names(n_rest)

    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}"]
    header += [f"property float {f}" for f in names]
    header.append("end_header")

    f_dc = scene.sh_coeffs[:, 0, :]                         # (N, 3)
    # channel-major flatten: all R rest coeffs, then G, then B
    f_rest = scene.sh_coeffs[:, 1:, :].transpose(0, 2, 1).reshape(n, n_rest)
    payload = np.concatenate([
        scene.positions,
        np.zeros((n, 3), dtype=np.float32),                 # nx ny nz
        f_dc,
        f_rest,
        scene.opacity_logits[:, None],
        scene.log_scales,
        scene.rotations,
    ], axis=1).astype("<f4")

    return ("\n".join(header) + "\n").encode("ascii") + payload.tobytes()


def save_ply(scene: GaussianScene, path: str | Path) -> None:
    """Write the scene in the canonical binary little-endian layout."""
    data = ply_bytes(scene)
    path = Path(path)
    try:
        path.write_bytes(data)
    except OSError as e:
        raise OSError(f"cannot write PLY to {path}: {e}") from e


def _parse_ply_header(fh) -> tuple[int, list[tuple[str, str]]]:
    line = fh.readline().decode("ascii", "replace").strip()
    if line != "ply":
        raise PlyFormatError("not a PLY file (missing 'ply' magic)")
    fmt = fh.readline().decode("ascii", "replace").strip()
    if fmt != "format binary_little_endian 1.0":
        raise PlyFormatError(f"unsupported PLY format line: {fmt!r}")
    count = None
    props: list[tuple[str, str]] = []
    while True:
        raw = fh.readline()
        if not raw:
            raise PlyFormatError("unterminated PLY header")
        line = raw.decode("ascii", "replace").strip()
        if line == "end_header":
            break
        parts = line.split()
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "element":
            if parts[1] != "vertex":
                raise PlyFormatError(f"unexpected element {parts[1]!r}; only 'vertex' is supported")
            count = int(parts[2])
        elif parts[0] == "property":
            if parts[1] not in ("float", "float32"):
                raise PlyFormatError(f"property {parts[2]!r} has type {parts[1]!r}, expected float")
            props.append((parts[2], parts[1]))
    if count is None:
        raise PlyFormatError("header missing 'element vertex'")
    return count, props


def scene_from_ply_bytes(data: bytes) -> GaussianScene:
    """Parse canonical PLY bytes; quaternions are renormalized."""
    return _read_ply(io.BytesIO(data))


def load_ply(path: str | Path) -> GaussianScene:
    """Load a Gaussian scene; quaternions are renormalized on load."""
    with open(Path(path), "rb") as fh:
        return _read_ply(fh)


def _read_ply(fh) -> GaussianScene:
    count, props = _parse_ply_header(fh)
    names = [p[0] for p in props]
    required = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
                "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
    for f in required:
        if f not in names:
            raise PlyFormatError(f"missing required field {f!r}")
    rest_names = sorted((n for n in names if n.startswith("f_rest_")),
                        key=lambda s: int(s.split("_")[-1]))
    n_rest = len(rest_names)
    if n_rest % 3 != 0:
        raise PlyFormatError(f"f_rest_* field count {n_rest} is not a multiple of 3")

    data = np.frombuffer(fh.read(count * len(names) * 4), dtype="<f4")
    if data.size != count * len(names):
        raise PlyFormatError("truncated PLY payload")
    data = data.reshape(count, len(names))

    col = {n: i for i, n in enumerate(names)}
    pick = lambda fs: data[:, [col[f] for f in fs]]

    positions = pick(["x", "y", "z"])
    f_dc = pick(["f_dc_0", "f_dc_1", "f_dc_2"])
    k = 1 + n_rest // 3
    sh = np.zeros((count, k, 3), dtype=np.float32)
    sh[:, 0, :] = f_dc
    if n_rest:
        rest = pick(rest_names).reshape(count, 3, k - 1)   # channel-major on disk
        sh[:, 1:, :] = rest.transpose(0, 2, 1)
    opacity = data[:, col["opacity"]]
    log_scales = pick(["scale_0", "scale_1", "scale_2"])
    rotations = pick(["rot_0", "rot_1", "rot_2", "rot_3"])

    if count:
        for name, arr in (("positions", positions), ("f_dc/f_rest", sh),
                          ("opacity", opacity), ("scales", log_scales),
                          ("rotations", rotations)):
            bad = ~np.isfinite(arr.reshape(count, -1)).all(axis=1)
            if bad.any():
                raise SceneDataError(f"non-finite {name} at vertex {int(np.argmax(bad))}")

    scene = GaussianScene(positions, rotations, log_scales, opacity, sh)
    if scene.count:
        scene.normalize_rotations(atol=1e-6)
    return scene


def sample_point_cloud(scene: GaussianScene, max_points: int) -> PointCloudSample:
    """Deterministic strided subsample of Gaussian centers.

    Returns min(count, max_points) points; with subsampling the selected
    indices are ``floor(i * count / m)`` for i in 0..m-1, a uniform stride.
    """
    if max_points < 1:
        raise ParameterError("max_points must be >= 1")
    n = scene.count
    m = min(n, max_points)
    if m == 0:
        return PointCloudSample(np.zeros((0, 3)), np.zeros((0, 3)))
    idx = (np.arange(m) * n) // m
    return PointCloudSample(scene.positions[idx].astype(np.float64),
                            scene.base_colors()[idx])
