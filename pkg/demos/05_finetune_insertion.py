"""Mask-aware reconstruction: inserting the mocked object into the room.

A reduced version of the full insertion pipeline (64 px views, 600
iterations) that runs in about a minute; the acceptance suite runs the
full-scale version.  Compares the edited scene's held-out render with
the ground-truth union scene the mock exposed.
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from _room import make_room  # noqa: E402

from splatedit import (GaussianScene, InpaintRequest, extract_view_bundles,
                       finetune, inpaint, psnr, render_fast, seed_coarse_prior)
from splatedit.cameras import (OrientedBBox, TrajectorySpec, make_trajectory,
                               project_bbox_mask)
from splatedit.images import save_png
from splatedit.reconstruction import (EditedView, SupervisionSet, TrainConfig,
                                      TrainingView)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

wh, f = 64, 64.0
room = make_room(16)
bbox = OrientedBBox(np.array([0.3, -0.2, 0.95]), np.full(3, 0.5),
                    np.array([1.0, 0, 0, 0]))

cams = []
for side in ("left", "right"):
    cams += make_trajectory(bbox, TrajectorySpec(
        n_views=7, arc_degrees=120.0, radius=2.2, elevation_degrees=15.0,
        side=side, fx=f, fy=f, width=wh, height=wh))
prior = seed_coarse_prior(bbox, 250, seed=1)
bundles = extract_view_bundles(room, prior, bbox, cams)
response = inpaint(InpaintRequest(bundles, "a colorful object",
                                  (len(bundles) - 1) // 2, seed=11), endpoint="mock")

ring_box = OrientedBBox(np.array([0.0, 0.0, 0.8]), np.full(3, 2.0),
                        np.array([1.0, 0, 0, 0]))
tcams = make_trajectory(ring_box, TrajectorySpec(
    n_views=9, arc_degrees=360.0, radius=5.0, elevation_degrees=20.0, side="full",
    fx=f, fy=f, width=wh, height=wh))[:-1]
training = [TrainingView(c, render_fast(room, c, (0, 0, 0)).color,
                         project_bbox_mask(bbox, c)) for c in tcams]

supervision = SupervisionSet(
    edited_views=[EditedView(b.camera, img)
                  for b, img in zip(bundles, response.images)],
    training_views=training)

initial = GaussianScene.concatenate(room, prior)
t0 = time.time()
edited = finetune(initial, supervision, TrainConfig(iterations=600, seed=7),
                  log_file=out / "finetune_log.jsonl")
print(f"600 iterations in {time.time() - t0:.0f}s; "
      f"{initial.count} -> {edited.count} Gaussians")

gt = GaussianScene.concatenate(room, response.hidden_object)
held = make_trajectory(bbox, TrajectorySpec(
    n_views=3, arc_degrees=90.0, radius=2.2, elevation_degrees=15.0, side="full",
    fx=f, fy=f, width=wh, height=wh))
for i, cam in enumerate(held):
    got = render_fast(edited, cam, (0, 0, 0)).color
    want = render_fast(gt, cam, (0, 0, 0)).color
    mask = project_bbox_mask(bbox, cam)
    save_png(got, out / f"insertion_edited{i}.png")
    save_png(want, out / f"insertion_groundtruth{i}.png")
    print(f"held-out view {i}: masked-region PSNR {psnr(got, want, mask):.1f} dB")
