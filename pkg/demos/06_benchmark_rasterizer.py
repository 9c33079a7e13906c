"""Plain vs tiled rasterizer: equality check and speedup measurement.

The headline case (50k Gaussians at 256 px) takes a couple of minutes
because the plain path really does evaluate every splat over the full
frame; pass --small for a quick look.
"""

import sys
import time
from pathlib import Path

import numpy as np

from splatedit import GaussianScene, render, render_fast
from splatedit.cameras import look_at

small = "--small" in sys.argv
n, wh = (5000, 128) if small else (50_000, 256)

rng = np.random.default_rng(0)
quats = rng.normal(size=(n, 4))
quats /= np.linalg.norm(quats, axis=1, keepdims=True)
scene = GaussianScene(
    positions=rng.uniform(-2, 2, (n, 3)),
    rotations=quats,
    log_scales=rng.uniform(np.log(0.005), np.log(0.05), (n, 3)),
    opacity_logits=rng.uniform(-1, 3, n),
    sh_coeffs=rng.uniform(-1, 1, (n, 1, 3)),
)
cam = look_at(np.array([0.0, -6.0, 2.0]), np.zeros(3), np.array([0.0, 0.0, 1.0]),
              fx=wh * 1.1, fy=wh * 1.1, width=wh, height=wh)

render_fast(scene, cam, (0, 0, 0))  # warm the jit cache
t0 = time.time()
fast = render_fast(scene, cam, (0, 0, 0))
t_fast = time.time() - t0
print(f"tiled path:  {t_fast * 1000:8.1f} ms   ({n} Gaussians at {wh}px)")

t0 = time.time()
slow = render(scene, cam, (0, 0, 0))
t_slow = time.time() - t0
print(f"plain path:  {t_slow * 1000:8.1f} ms")

print(f"speedup:     {t_slow / t_fast:8.1f}x")
print(f"max per-channel deviation: {np.abs(slow.color - fast.color).max():.2e}")
