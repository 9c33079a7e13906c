"""Shared projection stage of the splat renderer.

The compositing math is identical across the plain, tiled, and backward
paths so the paths agree to float-rounding precision:

* splats with camera-space z <= NEAR_CLIP (0.2) are dropped;
* camera-space x/z and y/z ratios are clamped to 1.3 * tan(fov/2) when
  building the projection Jacobian (the mean uses unclamped ratios);
* the 2D covariance gets +COV_REG (0.3 px^2) added to its diagonal, and
  splats whose regularized covariance is still singular are skipped;
* the footprint is a continuously truncated Gaussian,

      alpha = opacity * max(0, exp(-q/2) - exp(-MAHAL_CUTOFF/2)),

  with q the squared Mahalanobis distance and MAHAL_CUTOFF = 16 (a
  4-sigma support).  The subtraction makes alpha reach zero exactly at
  the cutoff, so the rendered image is a continuous function of every
  parameter and the tiled path can cull on the 4-sigma radius without
  changing the output.  The residual shift exp(-8) ~ 3.4e-4 bounds the
  deviation from an untruncated Gaussian;
* compositing walks splats front to back (depth sort on center z, ties
  broken by array index); a pixel stops accepting contributions right
  after the splat that pushes its transmittance below T_MIN = 1e-6,
  which bounds the truncated tail by T_MIN;
* the composited color is blended over the background with the residual
  transmittance, then clamped to [0, 1].

Colors come from the degree-0 SH term, c = max(0, 0.5 + SH_C0 * f_dc);
higher-degree coefficients are carried by the scene format but not
evaluated by the renderer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..cameras import NEAR_CLIP, Camera, quat_to_matrix
from ..errors import SceneDataError
from ..scene import SH_C0, GaussianScene

MAHAL_CUTOFF = 16.0                       # 4 sigma, squared
FOOTPRINT_SHIFT = float(np.exp(-0.5 * MAHAL_CUTOFF))
T_MIN = 1e-6
COV_REG = 0.3                             # px^2 added to the 2D covariance diagonal
DEPTH_ALPHA_EPS = 1e-4                    # depth sentinel below this accumulated alpha
TILE = 16
CULL_SIGMA = np.sqrt(MAHAL_CUTOFF)        # pixel cull radius in sigma units


@dataclass
class ProjectedSplats:
    """Per-splat screen-space quantities for one (scene, camera) pair.

    Arrays cover only the splats that survive near-plane and singular
    covariance culling, in the scene's original order; `index` maps rows
    back to scene indices.  Intermediates needed by the backward pass
    are kept alongside.
    """

    index: NDArray[np.int64]       # (K,) scene indices
    mean2d: NDArray[np.float64]    # (K, 2) pixel coords
    conic: NDArray[np.float64]     # (K, 3) inverse-covariance entries (A, B, C)
    z: NDArray[np.float64]         # (K,) camera-space depth
    color: NDArray[np.float64]     # (K, 3) clamped SH0 color
    opacity: NDArray[np.float64]   # (K,)
    radius: NDArray[np.float64]    # (K,) cull radius in pixels
    order: NDArray[np.int64]       # (K,) rows sorted by (z, index)
    # backward intermediates
    t_cam: NDArray[np.float64]     # (K, 3)
    ratio: NDArray[np.float64]     # (K, 2) clamped x/z, y/z used in J
    ratio_clamped: NDArray[np.bool_]  # (K, 2) True where the clamp engaged
    cov2d: NDArray[np.float64]     # (K, 2, 2) regularized
    sigma3d: NDArray[np.float64]   # (K, 3, 3)
    m3d: NDArray[np.float64]       # (K, 3, 3) rotation @ diag(scale)
    rot3d: NDArray[np.float64]     # (K, 3, 3)
    quat_n: NDArray[np.float64]    # (K, 4) normalized quaternions
    scales: NDArray[np.float64]    # (K, 3) exp(log_scales)
    color_unclamped: NDArray[np.float64]  # (K, 3) 0.5 + C0 * sh0

    @property
    def count(self) -> int:
        return len(self.index)


def validate_scene_for_render(scene: GaussianScene) -> None:
    for name in ("positions", "rotations", "log_scales", "opacity_logits", "sh_coeffs"):
        if not np.all(np.isfinite(getattr(scene, name))):
            raise SceneDataError(f"non-finite values in scene.{name}")


def project_gaussians(scene: GaussianScene, camera: Camera) -> ProjectedSplats:
    """EWA-project every splat; drop near-clipped and singular ones."""
    validate_scene_for_render(scene)
    n = scene.count
    if n == 0:
        return _empty_projection()

    pos = scene.positions.astype(np.float64)
    rw, tw = camera.rotation, camera.translation
    t_cam = pos @ rw.T + tw
    infront = t_cam[:, 2] > NEAR_CLIP
    idx = np.flatnonzero(infront)
    if idx.size == 0:
        return _empty_projection()
    t = t_cam[idx]
    tz = t[:, 2]

    quat = scene.rotations[idx].astype(np.float64)
    quat_n = quat / np.linalg.norm(quat, axis=1, keepdims=True)
    rot3d = quat_to_matrix(quat_n)
    scales = np.exp(scene.log_scales[idx].astype(np.float64))
    m3d = rot3d * scales[:, None, :]            # R @ diag(s): scale columns
    sigma = m3d @ m3d.transpose(0, 2, 1)

    lim_x = 1.3 * (camera.width / (2.0 * camera.fx))
    lim_y = 1.3 * (camera.height / (2.0 * camera.fy))
    raw_rx = t[:, 0] / tz
    raw_ry = t[:, 1] / tz
    rx = np.clip(raw_rx, -lim_x, lim_x)
    ry = np.clip(raw_ry, -lim_y, lim_y)
    ratio = np.stack([rx, ry], axis=1)
    ratio_clamped = np.stack([rx != raw_rx, ry != raw_ry], axis=1)

    j = np.zeros((len(idx), 2, 3))
    j[:, 0, 0] = camera.fx / tz
    j[:, 0, 2] = -camera.fx * rx / tz
    j[:, 1, 1] = camera.fy / tz
    j[:, 1, 2] = -camera.fy * ry / tz
    t2 = j @ rw[None, :, :]
    cov2d = t2 @ sigma @ t2.transpose(0, 2, 1)
    cov2d[:, 0, 0] += COV_REG
    cov2d[:, 1, 1] += COV_REG

    a, b, c = cov2d[:, 0, 0], cov2d[:, 0, 1], cov2d[:, 1, 1]
    det = a * c - b * b
    ok = det > 1e-12
    if not ok.all():
        idx = idx[ok]
        t, tz = t[ok], tz[ok]
        quat_n, rot3d, scales = quat_n[ok], rot3d[ok], scales[ok]
        m3d, sigma, ratio, ratio_clamped = m3d[ok], sigma[ok], ratio[ok], ratio_clamped[ok]
        cov2d = cov2d[ok]
        a, b, c, det = a[ok], b[ok], c[ok], det[ok]

    conic = np.stack([c / det, -b / det, a / det], axis=1)
    mean2d = np.stack([camera.fx * t[:, 0] / tz + camera.cx,
                       camera.fy * t[:, 1] / tz + camera.cy], axis=1)
    mid = 0.5 * (a + c)
    lam_max = mid + np.sqrt(np.maximum(0.25 * (a - c) ** 2 + b * b, 0.0))
    radius = CULL_SIGMA * np.sqrt(lam_max)

    sh0 = scene.sh_coeffs[idx, 0, :].astype(np.float64)
    color_unclamped = 0.5 + SH_C0 * sh0
    color = np.maximum(color_unclamped, 0.0)
    opacity = 1.0 / (1.0 + np.exp(-scene.opacity_logits[idx].astype(np.float64)))

    order = np.argsort(tz, kind="stable")
    return ProjectedSplats(
        index=idx.astype(np.int64), mean2d=mean2d, conic=conic, z=tz,
        color=color, opacity=opacity, radius=radius, order=order,
        t_cam=t, ratio=ratio, ratio_clamped=ratio_clamped, cov2d=cov2d,
        sigma3d=sigma, m3d=m3d, rot3d=rot3d, quat_n=quat_n, scales=scales,
        color_unclamped=color_unclamped,
    )


def _empty_projection() -> ProjectedSplats:
    f = lambda *shape: np.zeros(shape)
    return ProjectedSplats(
        index=np.zeros(0, dtype=np.int64), mean2d=f(0, 2), conic=f(0, 3), z=f(0),
        color=f(0, 3), opacity=f(0), radius=f(0), order=np.zeros(0, dtype=np.int64),
        t_cam=f(0, 3), ratio=f(0, 2), ratio_clamped=np.zeros((0, 2), dtype=bool),
        cov2d=f(0, 2, 2), sigma3d=f(0, 3, 3), m3d=f(0, 3, 3), rot3d=f(0, 3, 3),
        quat_n=f(0, 4), scales=f(0, 3), color_unclamped=f(0, 3),
    )


def pixel_centers(width: int, height: int) -> tuple[NDArray, NDArray]:
    """Meshgrid of pixel-center sample coordinates, each (height, width)."""
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    return np.meshgrid(xs, ys)


def splat_alpha(proj: ProjectedSplats, rows, px, py):
    """Truncated footprint alpha of splat rows at the given pixel coords.

    px/py may be any shape broadcastable against rows' trailing axis.
    Returns (alpha, g, dx, dy) where g is the raw exp(-q/2); samples
    beyond the cutoff carry alpha == 0 exactly.
    """
    mean = proj.mean2d[rows]
    con = proj.conic[rows]
    dx = px - mean[..., 0]
    dy = py - mean[..., 1]
    q = con[..., 0] * dx * dx + 2.0 * con[..., 1] * dx * dy + con[..., 2] * dy * dy
    inside = (q <= MAHAL_CUTOFF) & (q >= 0.0)
    g = np.where(inside, np.exp(-0.5 * np.where(inside, q, 0.0)), 0.0)
    alpha = proj.opacity[rows] * np.maximum(g - FOOTPRINT_SHIFT, 0.0)
    return alpha, g, dx, dy
