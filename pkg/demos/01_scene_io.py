"""Scene containers and PLY round trips.

Builds a small synthetic scene, writes it in the standard Gaussian
Splatting PLY layout, reads it back, and samples a point cloud the way
the placement UI consumes it.
"""

import json
from pathlib import Path

import numpy as np

from splatedit import GaussianScene, load_ply, sample_point_cloud, save_ply

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

rng = np.random.default_rng(0)
n = 500
quats = rng.normal(size=(n, 4))
quats /= np.linalg.norm(quats, axis=1, keepdims=True)
scene = GaussianScene(
    positions=rng.uniform(-2, 2, (n, 3)),
    rotations=quats,
    log_scales=rng.uniform(np.log(0.02), np.log(0.2), (n, 3)),
    opacity_logits=rng.uniform(-1, 3, n),
    sh_coeffs=rng.uniform(-1, 1, (n, 1, 3)),
)
print(f"built a scene with {scene.count} Gaussians, SH degree {scene.sh_degree}")

ply_path = out / "toy_scene.ply"
save_ply(scene, ply_path)
print(f"wrote {ply_path} ({ply_path.stat().st_size} bytes)")

loaded = load_ply(ply_path)
print("round trip lossless:", loaded == scene)

cloud = sample_point_cloud(loaded, max_points=100)
cloud_path = out / "toy_cloud.json"
cloud_path.write_text(json.dumps(cloud.to_json_dict()))
print(f"sampled {len(cloud.points)} centers for the UI -> {cloud_path}")
print("first point:", cloud.points[0], "color:", np.round(cloud.colors[0], 3))
