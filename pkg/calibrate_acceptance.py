"""One-off calibration for the acceptance-suite scenarios (not shipped)."""
import json
import time

import numpy as np

from splatedit.cameras import OrientedBBox, TrajectorySpec, make_trajectory, project_bbox_mask
from splatedit.metrics import background_fidelity_eval, consistency_eval, psnr
from splatedit.pipeline import (InpaintRequest, extract_view_bundles, inpaint,
                                mock_inpainter, seed_coarse_prior)
from splatedit.rasterizer import render_fast
from splatedit.reconstruction import (EditedView, SupervisionSet, TrainConfig,
                                      TrainingView, finetune)
from splatedit.scene import GaussianScene
from splatedit.wire import WireView
from tests.conftest import make_room_scene


def training_ring(n, radius, wh, f, elevation=20.0, center=(0.0, 0.0, 0.8)):
    box = OrientedBBox(np.array(center), np.full(3, radius / 2.5), np.array([1.0, 0, 0, 0]))
    spec = TrajectorySpec(n_views=n, arc_degrees=360.0, radius=radius,
                          elevation_degrees=elevation, side="full",
                          fx=f, fy=f, width=wh, height=wh)
    return make_trajectory(box, spec)[:-1]  # drop duplicated 360-degree endpoint


def e2e(iterations=3000, wh=128, n_side=26, n_views=14, log=True):
    t0 = time.time()
    room = make_room_scene(n_side)
    print("room gaussians:", room.count)
    bbox = OrientedBBox(np.array([0.3, -0.2, 0.95]), np.full(3, 0.5),
                        np.array([1.0, 0.0, 0.0, 0.0]))
    f = float(wh)
    cams = []
    for side in ("left", "right"):
        cams += make_trajectory(bbox, TrajectorySpec(
            n_views=n_views, arc_degrees=120.0, radius=2.2, elevation_degrees=15.0,
            side=side, fx=f, fy=f, width=wh, height=wh))
    prior = seed_coarse_prior(bbox, 400, seed=1)
    bundles = extract_view_bundles(room, prior, bbox, cams)
    resp = inpaint(InpaintRequest(bundles, "a colorful object", (len(bundles) - 1) // 2,
                                  seed=11), endpoint="mock")
    hidden = resp.hidden_object
    print("hidden object:", hidden.count, "extract+inpaint", time.time() - t0)

    tcams = training_ring(12, 5.5, wh, f)
    training = [TrainingView(c, render_fast(room, c, (0, 0, 0)).color,
                             project_bbox_mask(bbox, c)) for c in tcams]
    edited = [EditedView(b.camera, img) for b, img in zip(bundles, resp.images)]
    sup = SupervisionSet(edited_views=edited, training_views=training)
    initial = GaussianScene.concatenate(room, prior)
    cfg = TrainConfig(iterations=iterations, seed=7,
                      log_interval=200)
    t1 = time.time()
    out = finetune(initial, sup, cfg, log_file="/tmp/e2e_log.jsonl" if log else None)
    t_train = time.time() - t1
    print(f"train {t_train:.1f}s final count {out.count}")

    gt_scene = GaussianScene.concatenate(room, hidden)
    held = make_trajectory(bbox, TrajectorySpec(
        n_views=4, arc_degrees=100.0, radius=2.2, elevation_degrees=15.0,
        side="full", fx=f, fy=f, width=wh, height=wh))
    vals = []
    for cam in held:
        gt = render_fast(gt_scene, cam, (0, 0, 0)).color
        got = render_fast(out, cam, (0, 0, 0)).color
        mask = project_bbox_mask(bbox, cam)
        vals.append(psnr(got, gt, region_mask=mask))
    print("held-out masked PSNR per view:", [round(v, 2) for v in vals])
    print("mean:", np.mean(vals), "min:", np.min(vals), "total time", time.time() - t0)
    return out


def ablations(wh=64, iterations=1200, n_side=14):
    room = make_room_scene(n_side)
    bbox = OrientedBBox(np.array([0.3, -0.2, 0.95]), np.full(3, 0.45),
                        np.array([1.0, 0.0, 0.0, 0.0]))
    f = float(wh)
    cams = []
    for side in ("left", "right"):
        cams += make_trajectory(bbox, TrajectorySpec(
            n_views=7, arc_degrees=120.0, radius=2.0, elevation_degrees=15.0,
            side=side, fx=f, fy=f, width=wh, height=wh))
    prior = seed_coarse_prior(bbox, 250, seed=2)
    bundles = extract_view_bundles(room, prior, bbox, cams)
    resp = inpaint(InpaintRequest(bundles, "obj", (len(bundles) - 1) // 2, seed=5),
                   endpoint="mock")

    tcams = training_ring(10, 5.0, wh, f)
    training = [TrainingView(c, render_fast(room, c, (0, 0, 0)).color,
                             project_bbox_mask(bbox, c)) for c in tcams]
    initial = GaussianScene.concatenate(room, prior)
    cfg = TrainConfig(iterations=iterations, seed=3, scene_extent=None)

    t0 = time.time()
    # --- consistent run
    edited_c = [EditedView(b.camera, img) for b, img in zip(bundles, resp.images)]
    sup_c = SupervisionSet(edited_views=edited_c, training_views=training)
    out_c = finetune(initial, sup_c, cfg)
    rep_c = consistency_eval(out_c, [(b.camera, i) for b, i in zip(bundles, resp.images)])
    print("consistent PSNR:", rep_c.mean_psnr, "t", time.time() - t0)

    # --- per-view-independent targets (2D-inpaint analogue)
    images_i = []
    for i, b in enumerate(bundles):
        views = [WireView(b.camera, b.background, b.mask, b.depth)]
        imgs, _ = mock_inpainter(views, "obj", seed=1000 + i)
        images_i.append(np.where(b.mask[..., None], imgs[0], b.background))
    edited_i = [EditedView(b.camera, img) for b, img in zip(bundles, images_i)]
    sup_i = SupervisionSet(edited_views=edited_i, training_views=training)
    out_i = finetune(initial, sup_i, cfg)
    rep_i = consistency_eval(out_i, [(b.camera, i) for b, i in zip(bundles, images_i)])
    print("inconsistent PSNR:", rep_i.mean_psnr)
    print("A6 gap:", rep_c.mean_psnr - rep_i.mean_psnr)

    # --- mask-aware vs edited-only (same consistent targets)
    sup_only = SupervisionSet(edited_views=edited_c)
    out_only = finetune(initial, sup_only, cfg)
    masks = [project_bbox_mask(bbox, c) for c in tcams]
    rep_mask = background_fidelity_eval(room, out_c, tcams, masks)
    rep_nomask = background_fidelity_eval(room, out_only, tcams, masks)
    print("mask-aware bg PSNR:", rep_mask.mean_psnr,
          " edited-only bg PSNR:", rep_nomask.mean_psnr)
    print("A7 gap:", rep_mask.mean_psnr - rep_nomask.mean_psnr)


if __name__ == "__main__":
    import sys
    if "e2e" in sys.argv:
        e2e()
    if "abl" in sys.argv:
        ablations()
