"""Analytic gradients of the splat renderer.

Gradient of a scalar loss with respect to every Gaussian parameter,
given the loss gradient w.r.t. the rendered color image.  The chain
covers compositing (including the background blend and the final [0,1]
clamp), the truncated footprint, the conic inversion, the EWA
projection Jacobian with its fov clamp, the 3D covariance construction,
and quaternion normalization.  Cutoff indicators (footprint support,
transmittance termination, depth sort) are treated as locally constant,
as is standard for this renderer family; the depth and alpha outputs
are not differentiated.

The tile stage accumulates four screen-space partials per splat
(color, opacity, conic, mean); one vectorized chain then maps them back
to the 3D parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..cameras import Camera
from ..errors import ParameterError
from ..scene import SH_C0, GaussianScene
from . import _kernels
from .forward import composite_tile, tile_bins
from .projection import (FOOTPRINT_SHIFT, MAHAL_CUTOFF, T_MIN, TILE,
                         ProjectedSplats, project_gaussians)


@dataclass
class RenderGrad:
    """Per-Gaussian partials of a scalar loss, shapes mirroring the scene."""

    positions: NDArray[np.float64]
    rotations: NDArray[np.float64]
    log_scales: NDArray[np.float64]
    opacity_logits: NDArray[np.float64]
    sh_coeffs: NDArray[np.float64]
    # densification bookkeeping, not part of the parameter set
    screen_grad: NDArray[np.float64] = field(default=None)  # type: ignore[assignment]
    visible: NDArray[np.bool_] = field(default=None)        # type: ignore[assignment]

    @staticmethod
    def zeros(scene: GaussianScene) -> "RenderGrad":
        return RenderGrad(
            positions=np.zeros_like(scene.positions, dtype=np.float64),
            rotations=np.zeros_like(scene.rotations, dtype=np.float64),
            log_scales=np.zeros_like(scene.log_scales, dtype=np.float64),
            opacity_logits=np.zeros_like(scene.opacity_logits, dtype=np.float64),
            sh_coeffs=np.zeros_like(scene.sh_coeffs, dtype=np.float64),
            screen_grad=np.zeros(scene.count),
            visible=np.zeros(scene.count, dtype=bool),
        )


def _rotation_quat_grads(qn: NDArray) -> NDArray:
    """d(rotation matrix)/d(quaternion), shape (K, 4, 3, 3)."""
    w, x, y, z = qn[:, 0], qn[:, 1], qn[:, 2], qn[:, 3]
    zero = np.zeros_like(w)
    d = np.empty((len(qn), 4, 3, 3))
    d[:, 0] = 2.0 * np.stack([
        np.stack([zero, -z, y], -1),
        np.stack([z, zero, -x], -1),
        np.stack([-y, x, zero], -1)], -2)
    d[:, 1] = 2.0 * np.stack([
        np.stack([zero, y, z], -1),
        np.stack([y, -2 * x, -w], -1),
        np.stack([z, w, -2 * x], -1)], -2)
    d[:, 2] = 2.0 * np.stack([
        np.stack([-2 * y, x, w], -1),
        np.stack([x, zero, z], -1),
        np.stack([-w, z, -2 * y], -1)], -2)
    d[:, 3] = 2.0 * np.stack([
        np.stack([-2 * z, -w, x], -1),
        np.stack([w, -2 * z, y], -1),
        np.stack([x, y, zero], -1)], -2)
    return d


def _screen_grads_numpy(proj, camera, bg, loss_grad):
    """Numpy fallback for the tile stage; returns screen-space partials."""
    k = proj.count
    d_color = np.zeros((k, 3))
    d_opacity = np.zeros(k)
    d_conic = np.zeros((k, 3))
    d_mean = np.zeros((k, 2))
    ntx, nty, pair_row, starts = tile_bins(proj, camera.width, camera.height)

    for ty in range(nty):
        y0, y1 = ty * TILE, min((ty + 1) * TILE, camera.height)
        for tx in range(ntx):
            tid = ty * ntx + tx
            rows = pair_row[starts[tid]:starts[tid + 1]]
            if rows.size == 0:
                continue
            x0, x1 = tx * TILE, min((tx + 1) * TILE, camera.width)
            xs = np.arange(x0, x1, dtype=np.float64) + 0.5
            ys = np.arange(y0, y1, dtype=np.float64) + 0.5
            gx, gy = np.meshgrid(xs, ys)
            px, py = gx.ravel(), gy.ravel()

            t = composite_tile(proj, rows, px, py)
            w, alpha, keep = t["w"], t["alpha"], t["keep"]
            cols = proj.color[rows]

            pre = w @ cols + t["t_fin"][:, None] * bg
            g_img = loss_grad[y0:y1, x0:x1].reshape(-1, 3) * (pre <= 1.0)

            d_color_rows = w.T @ g_img

            contrib = w[:, :, None] * cols[None, :, :]
            suffix = np.flip(np.cumsum(np.flip(contrib, 1), axis=1), 1) - contrib
            behind = suffix + (t["t_fin"][:, None] * bg[None, :])[:, None, :]
            d_i_d_alpha = cols[None, :, :] * t["t_before"][:, :, None] \
                - behind / (1.0 - alpha)[:, :, None]
            d_alpha = np.einsum("pc,pkc->pk", g_img, d_i_d_alpha)
            d_alpha = np.where(keep & (t["g"] > FOOTPRINT_SHIFT), d_alpha, 0.0)

            # alpha = op * (g - shift) inside the footprint
            d_op_rows = (d_alpha * (t["g"] - FOOTPRINT_SHIFT)).sum(axis=0)
            d_g = d_alpha * proj.opacity[rows][None, :]
            d_q = -0.5 * t["g"] * d_g

            dx, dy = t["dx"], t["dy"]
            con = proj.conic[rows]
            d_con_rows = np.stack([
                (d_q * dx * dx).sum(axis=0),
                (d_q * 2.0 * dx * dy).sum(axis=0),
                (d_q * dy * dy).sum(axis=0)], axis=1)
            d_mx = (d_q * -(2.0 * con[None, :, 0] * dx + 2.0 * con[None, :, 1] * dy)).sum(axis=0)
            d_my = (d_q * -(2.0 * con[None, :, 1] * dx + 2.0 * con[None, :, 2] * dy)).sum(axis=0)

            np.add.at(d_color, rows, d_color_rows)
            np.add.at(d_opacity, rows, d_op_rows)
            np.add.at(d_conic, rows, d_con_rows)
            np.add.at(d_mean, rows, np.stack([d_mx, d_my], axis=1))
    return d_color, d_opacity, d_conic, d_mean, pair_row


def _screen_grads_numba(proj, camera, bg, loss_grad):
    ntx, nty, pair_row, starts = tile_bins(proj, camera.width, camera.height)
    n_pairs = len(pair_row)
    d_color_pairs = np.zeros((n_pairs, 3))
    d_opacity_pairs = np.zeros(n_pairs)
    d_conic_pairs = np.zeros((n_pairs, 3))
    d_mean_pairs = np.zeros((n_pairs, 2))
    _kernels.backward_tiles(starts, pair_row, proj.mean2d, proj.conic, proj.opacity,
                            proj.color, proj.z, camera.width, camera.height, TILE, ntx,
                            FOOTPRINT_SHIFT, MAHAL_CUTOFF, T_MIN,
                            bg, np.ascontiguousarray(loss_grad),
                            d_color_pairs, d_opacity_pairs, d_conic_pairs, d_mean_pairs)
    k = proj.count
    d_color = np.zeros((k, 3))
    d_opacity = np.zeros(k)
    d_conic = np.zeros((k, 3))
    d_mean = np.zeros((k, 2))
    np.add.at(d_color, pair_row, d_color_pairs)
    np.add.at(d_opacity, pair_row, d_opacity_pairs)
    np.add.at(d_conic, pair_row, d_conic_pairs)
    np.add.at(d_mean, pair_row, d_mean_pairs)
    return d_color, d_opacity, d_conic, d_mean, pair_row


def render_backward(scene: GaussianScene, camera: Camera, background,
                    loss_grad: NDArray) -> RenderGrad:
    """Backpropagate `loss_grad` (dL/d color image) to scene parameters."""
    loss_grad = np.asarray(loss_grad, dtype=np.float64)
    if loss_grad.shape != (camera.height, camera.width, 3):
        raise ParameterError(
            f"loss_grad shape {loss_grad.shape} does not match render output "
            f"({camera.height}, {camera.width}, 3)")
    bg = np.asarray(background, dtype=np.float64).reshape(3)
    grad = RenderGrad.zeros(scene)

    proj = project_gaussians(scene, camera)
    if proj.count == 0:
        return grad

    if _kernels.HAVE_NUMBA:
        d_color, d_opacity, d_conic, d_mean, pair_row = \
            _screen_grads_numba(proj, camera, bg, loss_grad)
    else:
        d_color, d_opacity, d_conic, d_mean, pair_row = \
            _screen_grads_numpy(proj, camera, bg, loss_grad)
    if pair_row.size:
        grad.visible[proj.index[np.unique(pair_row)]] = True

    # ---- per-splat chain back to 3D parameters (vectorized over K) ----
    k = proj.count
    fx, fy = camera.fx, camera.fy
    rw = camera.rotation
    t_cam = proj.t_cam
    tz = t_cam[:, 2]

    # conic -> 2D covariance (full-matrix calculus; Ghat folds the 2B term)
    ghat = np.empty((k, 2, 2))
    ghat[:, 0, 0] = d_conic[:, 0]
    ghat[:, 0, 1] = ghat[:, 1, 0] = 0.5 * d_conic[:, 1]
    ghat[:, 1, 1] = d_conic[:, 2]
    conic_m = np.empty((k, 2, 2))
    conic_m[:, 0, 0] = proj.conic[:, 0]
    conic_m[:, 0, 1] = conic_m[:, 1, 0] = proj.conic[:, 1]
    conic_m[:, 1, 1] = proj.conic[:, 2]
    d_cov = -conic_m @ ghat @ conic_m

    j = np.zeros((k, 2, 3))
    j[:, 0, 0] = fx / tz
    j[:, 0, 2] = -fx * proj.ratio[:, 0] / tz
    j[:, 1, 1] = fy / tz
    j[:, 1, 2] = -fy * proj.ratio[:, 1] / tz
    t2 = j @ rw[None, :, :]

    d_sigma = t2.transpose(0, 2, 1) @ d_cov @ t2
    d_t2 = 2.0 * d_cov @ t2 @ proj.sigma3d
    d_j = d_t2 @ rw.T[None, :, :]

    d_ratio_x = d_j[:, 0, 2] * (-fx / tz)
    d_ratio_y = d_j[:, 1, 2] * (-fy / tz)
    d_tz = (d_j[:, 0, 0] * (-fx / tz ** 2)
            + d_j[:, 1, 1] * (-fy / tz ** 2)
            + d_j[:, 0, 2] * (fx * proj.ratio[:, 0] / tz ** 2)
            + d_j[:, 1, 2] * (fy * proj.ratio[:, 1] / tz ** 2))
    free_x = ~proj.ratio_clamped[:, 0]
    free_y = ~proj.ratio_clamped[:, 1]
    d_tx = np.where(free_x, d_ratio_x / tz, 0.0)
    d_ty = np.where(free_y, d_ratio_y / tz, 0.0)
    d_tz = d_tz + np.where(free_x, d_ratio_x * (-t_cam[:, 0] / tz ** 2), 0.0) \
        + np.where(free_y, d_ratio_y * (-t_cam[:, 1] / tz ** 2), 0.0)

    # projected mean (uses unclamped ratios)
    d_tx = d_tx + d_mean[:, 0] * fx / tz
    d_ty = d_ty + d_mean[:, 1] * fy / tz
    d_tz = d_tz + d_mean[:, 0] * (-fx * t_cam[:, 0] / tz ** 2) \
        + d_mean[:, 1] * (-fy * t_cam[:, 1] / tz ** 2)

    d_t_cam = np.stack([d_tx, d_ty, d_tz], axis=1)
    d_pos = d_t_cam @ rw  # == (rw.T @ d_t_cam.T).T

    d_m = (d_sigma + d_sigma.transpose(0, 2, 1)) @ proj.m3d
    d_r3 = d_m * proj.scales[:, None, :]
    d_scale = np.einsum("kij,kij->kj", proj.rot3d, d_m)
    d_log_scale = d_scale * proj.scales

    dr_dq = _rotation_quat_grads(proj.quat_n)
    d_qn = np.einsum("kij,kqij->kq", d_r3, dr_dq)
    qn = proj.quat_n
    norm = np.linalg.norm(scene.rotations[proj.index].astype(np.float64), axis=1)
    d_quat = (d_qn - qn * np.sum(qn * d_qn, axis=1, keepdims=True)) / norm[:, None]

    op = proj.opacity
    d_logit = d_opacity * op * (1.0 - op)
    d_sh0 = d_color * SH_C0 * (proj.color_unclamped > 0.0)

    # scatter back to scene order
    sidx = proj.index
    grad.positions[sidx] = d_pos
    grad.rotations[sidx] = d_quat
    grad.log_scales[sidx] = d_log_scale
    grad.opacity_logits[sidx] = d_logit
    grad.sh_coeffs[sidx, 0, :] = d_sh0
    # half-image scaling puts the stat in the units the densification
    # threshold is calibrated for (NDC-style gradients)
    half = np.array([camera.width * 0.5, camera.height * 0.5])
    grad.screen_grad[sidx] = np.linalg.norm(d_mean * half, axis=1)
    return grad
