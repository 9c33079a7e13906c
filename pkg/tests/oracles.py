"""Independent reference implementations used as test oracles.

Everything here is written from the documented math, sharing no code
with the library paths it checks: the renderer oracle builds its own
projection and composites with stacked cumulative products, the SSIM
oracle loops over windows, and geometry oracles use scipy primitives.
"""

from __future__ import annotations

import struct

import numpy as np
from scipy.spatial.transform import Rotation

NEAR = 0.2
COV_REG = 0.3
CUTOFF = 16.0
SHIFT = np.exp(-8.0)
T_MIN = 1e-6
DEPTH_EPS = 1e-4


def quat_matrix(q):
    w, x, y, z = q / np.linalg.norm(q)
    # scipy uses (x, y, z, w) ordering
    return Rotation.from_quat([x, y, z, w]).as_matrix()


def render_oracle(scene, camera, background):
    """Stacked-array evaluation of the documented compositing math."""
    bg = np.asarray(background, dtype=np.float64)
    h, w = camera.height, camera.width
    rw, tw = camera.rotation, camera.translation
    fx, fy, cx, cy = camera.fx, camera.fy, camera.cx, camera.cy

    splats = []
    for i in range(scene.count):
        p = scene.positions[i].astype(np.float64)
        t = rw @ p + tw
        if t[2] <= NEAR:
            continue
        r3 = quat_matrix(scene.rotations[i].astype(np.float64))
        s = np.exp(scene.log_scales[i].astype(np.float64))
        cov3 = r3 @ np.diag(s ** 2) @ r3.T
        limx = 1.3 * w / (2 * fx)
        limy = 1.3 * h / (2 * fy)
        rx = min(max(t[0] / t[2], -limx), limx)
        ry = min(max(t[1] / t[2], -limy), limy)
        jac = np.array([[fx / t[2], 0, -fx * rx / t[2]],
                        [0, fy / t[2], -fy * ry / t[2]]])
        tmat = jac @ rw
        cov2 = tmat @ cov3 @ tmat.T + COV_REG * np.eye(2)
        det = cov2[0, 0] * cov2[1, 1] - cov2[0, 1] ** 2
        if det <= 1e-12:
            continue
        conic = np.linalg.inv(cov2)
        mean = np.array([fx * t[0] / t[2] + cx, fy * t[1] / t[2] + cy])
        op = 1.0 / (1.0 + np.exp(-float(scene.opacity_logits[i])))
        color = np.maximum(0.5 + 0.28209479177387814
                           * scene.sh_coeffs[i, 0].astype(np.float64), 0.0)
        splats.append((t[2], i, mean, conic, op, color))

    splats.sort(key=lambda s: (s[0],))  # python sort is stable: index ties keep order
    xs = np.arange(w) + 0.5
    ys = np.arange(h) + 0.5
    px, py = np.meshgrid(xs, ys)

    if splats:
        alphas = np.zeros((len(splats), h, w))
        for n, (z, i, mean, conic, op, color) in enumerate(splats):
            dx = px - mean[0]
            dy = py - mean[1]
            q = conic[0, 0] * dx ** 2 + 2 * conic[0, 1] * dx * dy + conic[1, 1] * dy ** 2
            inside = (q >= 0) & (q <= CUTOFF)
            alphas[n] = np.where(inside, op * (np.exp(-0.5 * np.where(inside, q, 0)) - SHIFT), 0.0)
        trans_after = np.cumprod(1.0 - alphas, axis=0)
        trans_before = np.concatenate([np.ones((1, h, w)), trans_after[:-1]], axis=0)
        below = trans_after < T_MIN
        kill = np.where(below.any(axis=0), below.argmax(axis=0), len(splats) - 1)
        keep = np.arange(len(splats))[:, None, None] <= kill[None]
        weights = np.where(keep, alphas * trans_before, 0.0)
        colors = np.stack([s[5] for s in splats])
        zs = np.array([s[0] for s in splats])
        color = np.einsum("nhw,nc->hwc", weights, colors)
        alpha = weights.sum(axis=0)
        depth_num = np.einsum("nhw,n->hw", weights, zs)
        t_fin = np.take_along_axis(trans_after, kill[None], axis=0)[0]
    else:
        color = np.zeros((h, w, 3))
        alpha = np.zeros((h, w))
        depth_num = np.zeros((h, w))
        t_fin = np.ones((h, w))

    color = np.clip(color + t_fin[..., None] * bg, 0.0, 1.0)
    depth = np.where(alpha > DEPTH_EPS, depth_num / np.maximum(alpha, DEPTH_EPS), 0.0)
    return color, depth, alpha


def ssim_oracle(a, b, window=11, sigma=1.5, c1=0.01 ** 2, c2=0.03 ** 2):
    """Windowed SSIM with explicit loops and zero padding."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    h, w, ch = a.shape
    half = window // 2
    x = np.arange(window) - half
    k1d = np.exp(-x ** 2 / (2 * sigma ** 2))
    k1d /= k1d.sum()
    kern = np.outer(k1d, k1d)

    pa = np.zeros((h + 2 * half, w + 2 * half, ch))
    pb = np.zeros_like(pa)
    pa[half:half + h, half:half + w] = a
    pb[half:half + h, half:half + w] = b

    total = 0.0
    for c in range(ch):
        for i in range(h):
            for j in range(w):
                wa = pa[i:i + window, j:j + window, c]
                wb = pb[i:i + window, j:j + window, c]
                mu1 = (kern * wa).sum()
                mu2 = (kern * wb).sum()
                s1 = (kern * wa * wa).sum() - mu1 ** 2
                s2 = (kern * wb * wb).sum() - mu2 ** 2
                s12 = (kern * wa * wb).sum() - mu1 * mu2
                total += ((2 * mu1 * mu2 + c1) * (2 * s12 + c2)) \
                    / ((mu1 ** 2 + mu2 ** 2 + c1) * (s1 + s2 + c2))
    return total / (h * w * ch)


def psnr_oracle(a, b):
    mse = float(np.mean((np.asarray(a, dtype=np.float64)
                         - np.asarray(b, dtype=np.float64)) ** 2))
    if mse <= 1e-10:
        return 99.0
    return min(10.0 * np.log10(1.0 / mse), 99.0)


def point_in_bbox_oracle(bbox, p):
    rot = quat_matrix(bbox.rotation)
    local = rot.T @ (np.asarray(p, dtype=np.float64) - bbox.center)
    return bool(np.all(np.abs(local) <= bbox.half_extents))


def bbox_mask_oracle(bbox, camera):
    """Corner projection + qhull + matplotlib path containment."""
    from matplotlib.path import Path as MplPath
    from scipy.spatial import ConvexHull

    corners = []
    signs = [(sx, sy, sz) for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    rot = quat_matrix(bbox.rotation)
    for s in signs:
        corners.append(bbox.center + rot @ (np.array(s) * bbox.half_extents))
    cam_pts = [camera.rotation @ c + camera.translation for c in corners]

    pts = [p for p in cam_pts if p[2] > NEAR]
    for ia in range(8):
        for ib in range(ia + 1, 8):
            if bin(ia ^ ib).count("1") != 1:
                continue
            a, b = cam_pts[ia], cam_pts[ib]
            if (a[2] > NEAR) != (b[2] > NEAR):
                t = (NEAR - a[2]) / (b[2] - a[2])
                pts.append(a + t * (b - a))
    if len(pts) < 3:
        return np.zeros((camera.height, camera.width), dtype=bool)
    proj = np.array([[camera.fx * p[0] / p[2] + camera.cx,
                      camera.fy * p[1] / p[2] + camera.cy] for p in pts])
    uni = np.unique(proj, axis=0)
    if len(uni) < 3:
        return np.zeros((camera.height, camera.width), dtype=bool)
    try:
        hull = ConvexHull(uni)
    except Exception:
        return np.zeros((camera.height, camera.width), dtype=bool)
    poly = uni[hull.vertices]
    path = MplPath(poly)
    xs = np.arange(camera.width) + 0.5
    ys = np.arange(camera.height) + 0.5
    px, py = np.meshgrid(xs, ys)
    inside = path.contains_points(np.stack([px.ravel(), py.ravel()], axis=1), radius=1e-9)
    return inside.reshape(camera.height, camera.width)


def write_official_ply(path, positions, f_dc, f_rest, opacity, scales, rots):
    """Struct-based writer mirroring the reference exporter layout."""
    n = len(positions)
    n_rest = f_rest.shape[1] if f_rest is not None else 0
    fields = ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
    fields += [f"f_rest_{i}" for i in range(n_rest)]
    fields += ["opacity", "scale_0", "scale_1", "scale_2",
               "rot_0", "rot_1", "rot_2", "rot_3"]
    header = "ply\nformat binary_little_endian 1.0\n"
    header += f"element vertex {n}\n"
    header += "".join(f"property float {f}\n" for f in fields)
    header += "end_header\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for i in range(n):
            row = list(positions[i]) + [0.0, 0.0, 0.0] + list(f_dc[i])
            if n_rest:
                row += list(f_rest[i])
            row += [float(opacity[i])] + list(scales[i]) + list(rots[i])
            fh.write(struct.pack("<" + "f" * len(row), *row))
