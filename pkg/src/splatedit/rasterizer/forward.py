"""Forward splat rendering: a plain full-frame path and a tiled path.

`render` walks splats front to back and evaluates each footprint over
the whole frame; it is the slow, obviously-correct formulation.
`render_fast` bins splats into 16x16 pixel tiles with a footprint
radius test and composites per tile, through a numba kernel when numba
is importable and a vectorized numpy fallback otherwise.  All paths
implement the identical math documented in `projection`, so they agree
to float-rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..cameras import Camera
from ..scene import GaussianScene
from . import _kernels
from .projection import (DEPTH_ALPHA_EPS, FOOTPRINT_SHIFT, MAHAL_CUTOFF, T_MIN,
                         TILE, ProjectedSplats, pixel_centers, project_gaussians,
                         splat_alpha)


@dataclass
class RenderOutput:
    """Composited color plus screen-space depth and coverage."""

    color: NDArray[np.float64]  # (H, W, 3) in [0, 1]
    depth: NDArray[np.float64]  # (H, W), 0 where alpha <= DEPTH_ALPHA_EPS
    alpha: NDArray[np.float64]  # (H, W) accumulated opacity in [0, 1]


def _finalize(color_acc, t_fin, bg, alpha_acc, depth_num) -> RenderOutput:
    color = color_acc + t_fin[..., None] * bg
    depth = np.where(alpha_acc > DEPTH_ALPHA_EPS,
                     depth_num / np.maximum(alpha_acc, DEPTH_ALPHA_EPS), 0.0)
    return RenderOutput(color=np.clip(color, 0.0, 1.0), depth=depth, alpha=alpha_acc)


def render(scene: GaussianScene, camera: Camera, background=(0.0, 0.0, 0.0)) -> RenderOutput:
    """Reference full-frame compositing in global depth order."""
    bg = np.asarray(background, dtype=np.float64).reshape(3)
    h, w = camera.height, camera.width
    proj = project_gaussians(scene, camera)
    px, py = pixel_centers(w, h)

    color_acc = np.zeros((h, w, 3))
    alpha_acc = np.zeros((h, w))
    depth_num = np.zeros((h, w))
    transmit = np.ones((h, w))
    done = np.zeros((h, w), dtype=bool)

    for row in proj.order:
        alpha, _, _, _ = splat_alpha(proj, int(row), px, py)
        contrib = (alpha > 0.0) & ~done
        if not contrib.any():
            continue
        wgt = np.where(contrib, alpha * transmit, 0.0)
        color_acc += wgt[..., None] * proj.color[row]
        alpha_acc += wgt
        depth_num += wgt * proj.z[row]
        transmit = np.where(contrib, transmit * (1.0 - alpha), transmit)
        done |= transmit < T_MIN

    return _finalize(color_acc, transmit, bg, alpha_acc, depth_num)


def tile_bins(proj: ProjectedSplats, width: int, height: int):
    """Depth-ordered (tile -> splat rows) assignment.

    Returns (n_tiles_x, n_tiles_y, pair_rows, tile_starts) where
    pair_rows lists projection rows grouped by tile id, each group
    front-to-back, and tile_starts[tid]:tile_starts[tid+1] slices it.
    """
    ntx = (width + TILE - 1) // TILE
    nty = (height + TILE - 1) // TILE
    if proj.count == 0:
        return ntx, nty, np.zeros(0, dtype=np.int64), np.zeros(ntx * nty + 1, dtype=np.int64)

    rows = proj.order
    mx, my = proj.mean2d[rows, 0], proj.mean2d[rows, 1]
    r = proj.radius[rows]
    tx0 = np.clip(np.floor((mx - r) / TILE).astype(np.int64), 0, ntx - 1)
    tx1 = np.clip(np.floor((mx + r) / TILE).astype(np.int64), 0, ntx - 1)
    ty0 = np.clip(np.floor((my - r) / TILE).astype(np.int64), 0, nty - 1)
    ty1 = np.clip(np.floor((my + r) / TILE).astype(np.int64), 0, nty - 1)
    onscreen = (mx + r >= 0) & (mx - r <= width) & (my + r >= 0) & (my - r <= height)

    nx = np.where(onscreen, tx1 - tx0 + 1, 0)
    ny = np.where(onscreen, ty1 - ty0 + 1, 0)
    counts = nx * ny
    total = int(counts.sum())
    if total == 0:
        return ntx, nty, np.zeros(0, dtype=np.int64), np.zeros(ntx * nty + 1, dtype=np.int64)

    pair_row = np.repeat(rows, counts)
    within = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    nx_rep = np.repeat(nx, counts)
    dtx = within % nx_rep
    dty = within // nx_rep
    tile_id = (np.repeat(ty0, counts) + dty) * ntx + (np.repeat(tx0, counts) + dtx)

    grouping = np.argsort(tile_id, kind="stable")  # keeps depth order inside each tile
    pair_row = pair_row[grouping]
    tile_id = tile_id[grouping]
    starts = np.searchsorted(tile_id, np.arange(ntx * nty + 1))
    return ntx, nty, pair_row, starts


def composite_tile(proj: ProjectedSplats, rows, px, py):
    """Vectorized one-tile compositing, the numpy fallback path.

    px/py are flattened pixel coords (P,).  Returns a dict of per-tile
    arrays: alpha (P, K), weights w (P, K), transmittance before each
    splat t_before (P, K), final transmittance t_fin (P,), keep mask
    (P, K), plus the raw gaussian g and the pixel offsets dx/dy.
    """
    alpha, g, dx, dy = splat_alpha(proj, rows[None, :], px[:, None], py[:, None])
    one_minus = 1.0 - alpha
    cp = np.cumprod(one_minus, axis=1)
    t_before = np.concatenate([np.ones((len(px), 1)), cp[:, :-1]], axis=1)
    t_after = cp
    below = t_after < T_MIN
    k = alpha.shape[1]
    # a pixel keeps every splat up to and including the one that pushes
    # its transmittance below T_MIN
    kill = np.where(below.any(axis=1), below.argmax(axis=1), k - 1)
    keep = np.arange(k)[None, :] <= kill[:, None]
    w = np.where(keep, alpha * t_before, 0.0)
    t_fin = np.take_along_axis(t_after, kill[:, None], axis=1)[:, 0]
    return {"alpha": alpha, "g": g, "dx": dx, "dy": dy,
            "w": w, "t_before": t_before, "t_fin": t_fin, "keep": keep}


def _render_fast_numpy(proj, camera, bg) -> RenderOutput:
    h, w = camera.height, camera.width
    ntx, nty, pair_row, starts = tile_bins(proj, w, h)
    color_acc = np.zeros((h, w, 3))
    alpha_acc = np.zeros((h, w))
    depth_num = np.zeros((h, w))
    t_fin_img = np.ones((h, w))

    for ty in range(nty):
        y0, y1 = ty * TILE, min((ty + 1) * TILE, h)
        for tx in range(ntx):
            tid = ty * ntx + tx
            rows = pair_row[starts[tid]:starts[tid + 1]]
            if rows.size == 0:
                continue
            x0, x1 = tx * TILE, min((tx + 1) * TILE, w)
            xs = np.arange(x0, x1, dtype=np.float64) + 0.5
            ys = np.arange(y0, y1, dtype=np.float64) + 0.5
            gx, gy = np.meshgrid(xs, ys)
            px, py = gx.ravel(), gy.ravel()
            t = composite_tile(proj, rows, px, py)
            shape = (y1 - y0, x1 - x0)
            color_acc[y0:y1, x0:x1] = (t["w"] @ proj.color[rows]).reshape(*shape, 3)
            alpha_acc[y0:y1, x0:x1] = t["w"].sum(axis=1).reshape(shape)
            depth_num[y0:y1, x0:x1] = (t["w"] @ proj.z[rows]).reshape(shape)
            t_fin_img[y0:y1, x0:x1] = t["t_fin"].reshape(shape)

    return _finalize(color_acc, t_fin_img, bg, alpha_acc, depth_num)


def _render_fast_numba(proj, camera, bg) -> RenderOutput:
    h, w = camera.height, camera.width
    ntx, nty, pair_row, starts = tile_bins(proj, w, h)
    color_acc = np.zeros((h, w, 3))
    alpha_acc = np.zeros((h, w))
    depth_num = np.zeros((h, w))
    t_fin_img = np.ones((h, w))
    _kernels.forward_tiles(starts, pair_row, proj.mean2d, proj.conic, proj.opacity,
                           proj.color, proj.z, w, h, TILE, ntx,
                           FOOTPRINT_SHIFT, MAHAL_CUTOFF, T_MIN,
                           color_acc, alpha_acc, depth_num, t_fin_img)
    return _finalize(color_acc, t_fin_img, bg, alpha_acc, depth_num)


def render_fast(scene: GaussianScene, camera: Camera, background=(0.0, 0.0, 0.0)) -> RenderOutput:
    """Tile-based compositing; equal to `render` within float rounding."""
    bg = np.asarray(background, dtype=np.float64).reshape(3)
    proj = project_gaussians(scene, camera)
    if _kernels.HAVE_NUMBA:
        return _render_fast_numba(proj, camera, bg)
    return _render_fast_numpy(proj, camera, bg)
