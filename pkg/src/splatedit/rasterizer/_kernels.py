"""Numba tile kernels behind render_fast and render_backward.

Per-pixel compositing runs front to back exactly as in the plain
renderer; tiles are independent, so the forward kernel parallelizes
over them.  The backward kernel writes per-(tile, splat) gradient slots
instead of shared per-splat accumulators, which keeps it race-free and
bit-deterministic regardless of thread scheduling; the host reduces the
slots in pair order afterwards.

The second backward pass per pixel reconstructs each splat's behind
term S_j = sum_{k>j} c_k w_k from the pixel's total kept color minus
the running front accumulation.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional speedup
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        return wrap

    prange = range


@njit(parallel=True, cache=True)
def forward_tiles(starts, pair_row, mean2d, conic, opacity, color, z,
                  width, height, tile, ntx, shift, cutoff, t_min,
                  out_color, out_alpha, out_depthnum, out_tfin):
    ntiles = len(starts) - 1
    for tid in prange(ntiles):
        ty = tid // ntx
        tx = tid - ty * ntx
        y0 = ty * tile
        x0 = tx * tile
        y1 = min(y0 + tile, height)
        x1 = min(x0 + tile, width)
        s0 = starts[tid]
        s1 = starts[tid + 1]
        for py in range(y0, y1):
            pyc = py + 0.5
            for px in range(x0, x1):
                pxc = px + 0.5
                t = 1.0
                cr = 0.0
                cg = 0.0
                cb = 0.0
                aa = 0.0
                dn = 0.0
                for s in range(s0, s1):
                    k = pair_row[s]
                    dx = pxc - mean2d[k, 0]
                    dy = pyc - mean2d[k, 1]
                    q = conic[k, 0] * dx * dx + 2.0 * conic[k, 1] * dx * dy \
                        + conic[k, 2] * dy * dy
                    if q > cutoff or q < 0.0:
                        continue
                    a = opacity[k] * (np.exp(-0.5 * q) - shift)
                    if a <= 0.0:
                        continue
                    w = a * t
                    cr += w * color[k, 0]
                    cg += w * color[k, 1]
                    cb += w * color[k, 2]
                    aa += w
                    dn += w * z[k]
                    t *= 1.0 - a
                    if t < t_min:
                        break
                out_color[py, px, 0] = cr
                out_color[py, px, 1] = cg
                out_color[py, px, 2] = cb
                out_alpha[py, px] = aa
                out_depthnum[py, px] = dn
                out_tfin[py, px] = t


@njit(parallel=True, cache=True)
def backward_tiles(starts, pair_row, mean2d, conic, opacity, color, z,
                   width, height, tile, ntx, shift, cutoff, t_min,
                   bg, loss_grad,
                   d_color_pairs, d_opacity_pairs, d_conic_pairs, d_mean_pairs):
    ntiles = len(starts) - 1
    for tid in prange(ntiles):
        ty = tid // ntx
        tx = tid - ty * ntx
        y0 = ty * tile
        x0 = tx * tile
        y1 = min(y0 + tile, height)
        x1 = min(x0 + tile, width)
        s0 = starts[tid]
        s1 = starts[tid + 1]
        if s1 == s0:
            continue
        for py in range(y0, y1):
            pyc = py + 0.5
            for px in range(x0, x1):
                pxc = px + 0.5
                # pass 1: totals for this pixel
                t = 1.0
                totr = 0.0
                totg = 0.0
                totb = 0.0
                for s in range(s0, s1):
                    k = pair_row[s]
                    dx = pxc - mean2d[k, 0]
                    dy = pyc - mean2d[k, 1]
                    q = conic[k, 0] * dx * dx + 2.0 * conic[k, 1] * dx * dy \
                        + conic[k, 2] * dy * dy
                    if q > cutoff or q < 0.0:
                        continue
                    a = opacity[k] * (np.exp(-0.5 * q) - shift)
                    if a <= 0.0:
                        continue
                    w = a * t
                    totr += w * color[k, 0]
                    totg += w * color[k, 1]
                    totb += w * color[k, 2]
                    t *= 1.0 - a
                    if t < t_min:
                        break
                t_fin = t
                # clamp-aware loss gradient (composite clipped to [0, 1])
                gr = loss_grad[py, px, 0] if totr + t_fin * bg[0] <= 1.0 else 0.0
                gg = loss_grad[py, px, 1] if totg + t_fin * bg[1] <= 1.0 else 0.0
                gb = loss_grad[py, px, 2] if totb + t_fin * bg[2] <= 1.0 else 0.0
                if gr == 0.0 and gg == 0.0 and gb == 0.0:
                    continue
                # pass 2: per-splat partials
                t = 1.0
                accr = 0.0
                accg = 0.0
                accb = 0.0
                for s in range(s0, s1):
                    k = pair_row[s]
                    dx = pxc - mean2d[k, 0]
                    dy = pyc - mean2d[k, 1]
                    q = conic[k, 0] * dx * dx + 2.0 * conic[k, 1] * dx * dy \
                        + conic[k, 2] * dy * dy
                    if q > cutoff or q < 0.0:
                        continue
                    g = np.exp(-0.5 * q)
                    a = opacity[k] * (g - shift)
                    if a <= 0.0:
                        continue
                    w = a * t
                    accr += w * color[k, 0]
                    accg += w * color[k, 1]
                    accb += w * color[k, 2]

                    d_color_pairs[s, 0] += w * gr
                    d_color_pairs[s, 1] += w * gg
                    d_color_pairs[s, 2] += w * gb

                    # dI/dalpha = c*T_before - (S + bg*T_fin) / (1 - a)
                    inv = 1.0 / (1.0 - a)
                    br = (totr - accr) + bg[0] * t_fin
                    bgn = (totg - accg) + bg[1] * t_fin
                    bb = (totb - accb) + bg[2] * t_fin
                    d_alpha = gr * (color[k, 0] * t - br * inv) \
                        + gg * (color[k, 1] * t - bgn * inv) \
                        + gb * (color[k, 2] * t - bb * inv)

                    d_opacity_pairs[s] += d_alpha * (g - shift)
                    d_q = -0.5 * g * (d_alpha * opacity[k])
                    d_conic_pairs[s, 0] += d_q * dx * dx
                    d_conic_pairs[s, 1] += d_q * 2.0 * dx * dy
                    d_conic_pairs[s, 2] += d_q * dy * dy
                    d_mean_pairs[s, 0] += d_q * -(2.0 * conic[k, 0] * dx + 2.0 * conic[k, 1] * dy)
                    d_mean_pairs[s, 1] += d_q * -(2.0 * conic[k, 1] * dx + 2.0 * conic[k, 2] * dy)

                    t *= 1.0 - a
                    if t < t_min:
                        break
