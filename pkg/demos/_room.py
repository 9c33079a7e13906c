"""Shared synthetic room used by the demo scripts."""

import numpy as np

from splatedit import GaussianScene

SH_C0 = 0.28209479177387814


def make_room(n_side: int = 22) -> GaussianScene:
    lin = np.linspace(-3.0, 3.0, n_side)
    xs, ys = np.meshgrid(lin, lin)
    fx, fy = xs.ravel(), ys.ravel()

    floor = np.stack([fx, fy, np.zeros_like(fx)], axis=1)
    checker = ((np.floor(fx) + np.floor(fy)) % 2)[:, None]
    floor_rgb = np.array([0.45, 0.42, 0.38]) + checker * np.array([0.18, 0.15, 0.12])

    zz = 0.25 + (fy + 3.0) * 0.5
    wall_n = np.stack([fx, np.full_like(fx, 3.2), zz], axis=1)
    wall_n_rgb = np.stack([0.35 + 0.1 * np.sin(2.1 * fx),
                           0.45 + 0.05 * np.cos(1.3 * zz),
                           np.full_like(fx, 0.6)], axis=1)

    wall_e = np.stack([np.full_like(fx, 3.2), fx, zz], axis=1)
    wall_e_rgb = np.stack([np.full_like(fx, 0.55),
                           0.4 + 0.1 * np.sin(1.7 * fx),
                           0.35 + 0.08 * np.cos(2.3 * zz)], axis=1)

    pts = np.concatenate([floor, wall_n, wall_e])
    rgb = np.clip(np.concatenate([floor_rgb, wall_n_rgb, wall_e_rgb]), 0, 1)
    n = len(pts)
    quats = np.zeros((n, 4))
    quats[:, 0] = 1.0
    return GaussianScene(pts, quats, np.full((n, 3), np.log(0.17)),
                         np.full(n, 2.5), ((rgb - 0.5) / SH_C0)[:, None, :])
