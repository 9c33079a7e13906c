from __future__ import annotations

import numpy as np
import pytest

from splatedit.cameras import Camera, OrientedBBox, look_at
from splatedit.scene import SH_C0, GaussianScene


def random_scene(rng: np.random.Generator, n: int,
                 pos_range: float = 1.0,
                 scale_range: tuple[float, float] = (0.05, 0.5),
                 logit_range: tuple[float, float] = (-2.0, 2.0)) -> GaussianScene:
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return GaussianScene(
        positions=rng.uniform(-pos_range, pos_range, size=(n, 3)),
        rotations=q,
        log_scales=rng.uniform(np.log(scale_range[0]), np.log(scale_range[1]), size=(n, 3)),
        opacity_logits=rng.uniform(*logit_range, size=n),
        sh_coeffs=rng.uniform(-1.2, 1.2, size=(n, 1, 3)),
    )


def random_camera(rng: np.random.Generator, wh: int = 32, fscale: float = 1.2) -> Camera:
    pos = rng.uniform(-1, 1, size=3) * np.array([1.0, 1.0, 0.3]) + np.array([0.0, 0.0, -4.0])
    target = rng.uniform(-0.2, 0.2, size=3)
    return look_at(pos, target, np.array([0.0, 0.0, 1.0]),
                   fx=wh * fscale, fy=wh * fscale, width=wh, height=wh)


def colors_to_sh(rgb: np.ndarray) -> np.ndarray:
    return ((np.asarray(rgb, dtype=np.float64) - 0.5) / SH_C0)[:, None, :]


def make_room_scene(n_side: int = 18) -> GaussianScene:
    """Synthetic room: checkered floor plus two textured walls."""
    lin = np.linspace(-3.0, 3.0, n_side)
    xs, ys = np.meshgrid(lin, lin)
    flat = lambda a: a.ravel()

    floor = np.stack([flat(xs), flat(ys), np.zeros(n_side ** 2)], axis=1)
    checker = ((np.floor(flat(xs)) + np.floor(flat(ys))) % 2)[:, None]
    floor_rgb = np.array([0.45, 0.42, 0.38]) + checker * np.array([0.18, 0.15, 0.12])

    zz = 0.25 + (flat(ys) + 3.0) * 0.5
    wall_n = np.stack([flat(xs), np.full(n_side ** 2, 3.2), zz], axis=1)
    wall_n_rgb = np.stack([0.35 + 0.1 * np.sin(2.1 * flat(xs)),
                           0.45 + 0.05 * np.cos(1.3 * zz),
                           np.full(n_side ** 2, 0.6)], axis=1)

    wall_e = np.stack([np.full(n_side ** 2, 3.2), flat(xs), zz], axis=1)
    wall_e_rgb = np.stack([np.full(n_side ** 2, 0.55),
                           0.4 + 0.1 * np.sin(1.7 * flat(xs)),
                           0.35 + 0.08 * np.cos(2.3 * zz)], axis=1)

    pts = np.concatenate([floor, wall_n, wall_e])
    rgb = np.clip(np.concatenate([floor_rgb, wall_n_rgb, wall_e_rgb]), 0.0, 1.0)
    n = len(pts)
    quats = np.zeros((n, 4))
    quats[:, 0] = 1.0
    return GaussianScene(pts, quats, np.full((n, 3), np.log(0.17)),
                         np.full(n, 2.5), colors_to_sh(rgb))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def room_scene() -> GaussianScene:
    return make_room_scene()


@pytest.fixture
def unit_bbox() -> OrientedBBox:
    return OrientedBBox(np.array([0.0, 0.0, 0.7]), np.array([0.55, 0.55, 0.55]),
                        np.array([1.0, 0.0, 0.0, 0.0]))
