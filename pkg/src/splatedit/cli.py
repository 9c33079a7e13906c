"""Stage-by-stage pipeline driver.

Subcommands mirror the pipeline stages and persist their artifacts
under the configured output directory, so the inpainting service can be
swapped (mock vs real endpoint) without redoing extraction:

    sample-pointcloud  scene PLY -> point cloud JSON for the placement UI
    extract            coarse prior + trajectory + view bundles on disk
    inpaint            bundles -> inpainted views via endpoint or mock
    reconstruct        mask-aware finetuning -> edited scene PLY + log
    evaluate           consistency + background fidelity reports
    run-all            the four stages in sequence

Exit codes are a stable contract: 0 success, 2 configuration error,
3 transport error, 4 training divergence.

Configuration is one JSON file (see `default_config`); common fields
can be overridden with flags.  Every artifact manifest embeds the
config hash for provenance, and all stages are deterministic given the
same config and seed.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click
import numpy as np

from .cameras import (Camera, OrientedBBox, TrajectorySpec, load_bbox_json,
                      make_trajectory, project_bbox_mask, save_cameras_json)
from .errors import (ConfigError, ParameterError, ProtocolError, SplateditError,
                     TrainingDivergedError, TransportError)
from .images import (decode_mask_png, load_pfm, normalized_depth, save_mask_png,
                     save_pfm, save_png)
from .metrics import background_fidelity_eval, consistency_eval, contact_sheet
from .pipeline import (InpaintRequest, ViewBundle, extract_view_bundles, inpaint,
                       seed_coarse_prior)
from .rasterizer import render_fast
from .reconstruction import (EditedView, SupervisionSet, TrainConfig,
                             TrainingView, finetune, save_checkpoint)
from .scene import (GaussianScene, load_ply, sample_point_cloud, save_ply,
                    scene_from_ply_bytes)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRANSPORT = 3
EXIT_DIVERGED = 4


def default_config() -> dict:
    return {
        "scene_ply": "scene.ply",
        "bbox_json": "bbox.json",
        "output_dir": "out",
        "prompt": "a colorful object",
        "seed": 0,
        "endpoint": "mock",
        "background": [0.0, 0.0, 0.0],
        "trajectory": {
            "n_views": 14,
            "arc_degrees": 120.0,
            "sides": ["left", "right"],
            "radius": None,
            "elevation_degrees": 15.0,
            "fx": 128.0, "fy": 128.0, "width": 128, "height": 128,
        },
        "coarse_prior": {"n_gaussians": 400},
        "training_views": {
            "n_views": 12,
            "radius": None,
            "elevation_degrees": 20.0,
            "fx": 128.0, "fy": 128.0, "width": 128, "height": 128,
        },
        "train": TrainConfig(iterations=3000).to_dict(),
        "initial_scene": "original+prior",   # or "original"
    }


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | None, overrides: dict) -> dict:
    cfg = default_config()
    if path:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            cfg = _merge(cfg, json.loads(p.read_text()))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
    cfg = _merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _require_inputs(cfg: dict) -> tuple[GaussianScene, OrientedBBox, Path]:
    scene_path = Path(cfg["scene_ply"])
    bbox_path = Path(cfg["bbox_json"])
    if not scene_path.exists():
        raise ConfigError(f"scene PLY not found: {scene_path}")
    if not bbox_path.exists():
        raise ConfigError(f"bbox JSON not found: {bbox_path}")
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    return load_ply(scene_path), load_bbox_json(bbox_path), out_dir


def _edit_cameras(cfg: dict, bbox: OrientedBBox) -> tuple[list[Camera], list[tuple[str, int]]]:
    """Trajectory cameras for every configured arc, with (side, count) spans."""
    t = cfg["trajectory"]
    cams: list[Camera] = []
    spans = []
    for side in t["sides"]:
        spec = TrajectorySpec(n_views=t["n_views"], arc_degrees=t["arc_degrees"],
                              radius=t["radius"], elevation_degrees=t["elevation_degrees"],
                              side=side, fx=t["fx"], fy=t["fy"],
                              width=t["width"], height=t["height"])
        arc = make_trajectory(bbox, spec)
        spans.append((side, len(arc)))
        cams.extend(arc)
    return cams, spans


def _training_cameras(cfg: dict, scene: GaussianScene) -> list[Camera]:
    """Inward-looking ring around the scene centroid."""
    t = cfg["training_views"]
    center = scene.positions.astype(np.float64).mean(axis=0) if scene.count \
        else np.zeros(3)
    if t["radius"] is None:
        spread = scene.positions.astype(np.float64) - center
        radius = 2.0 * float(np.linalg.norm(spread, axis=1).max()) if scene.count else 5.0
    else:
        radius = t["radius"]
    box = OrientedBBox(center, np.full(3, max(radius / 2.5, 1e-3)), np.array([1.0, 0, 0, 0]))
    spec = TrajectorySpec(n_views=t["n_views"], arc_degrees=360.0, radius=radius,
                          elevation_degrees=t["elevation_degrees"], side="full",
                          fx=t["fx"], fy=t["fy"], width=t["width"], height=t["height"])
    return make_trajectory(box, spec)


# ------------------------------------------------------------ stages

def stage_extract(cfg: dict) -> Path:
    scene, bbox, out_dir = _require_inputs(cfg)
    cameras, spans = _edit_cameras(cfg, bbox)
    coarse = seed_coarse_prior(bbox, cfg["coarse_prior"]["n_gaussians"], cfg["seed"])
    bundles = extract_view_bundles(scene, coarse, bbox, cameras,
                                   background=tuple(cfg["background"]))

    bdir = out_dir / "bundles"
    bdir.mkdir(exist_ok=True)
    for i, b in enumerate(bundles):
        stem = bdir / f"view_{i:03d}"
        save_pfm(b.background, f"{stem}.background.pfm")
        save_pfm(b.depth, f"{stem}.depth.pfm")
        save_mask_png(b.mask, f"{stem}.mask.png")
        Path(f"{stem}.camera.json").write_text(json.dumps(b.camera.to_json_dict()))
        save_png(b.background, f"{stem}.background.png")
        norm, dmin, dmax = normalized_depth(b.depth)
        save_png(np.repeat(norm[..., None], 3, axis=2), f"{stem}.depth.png")
        Path(f"{stem}.depth.png.json").write_text(
            json.dumps({"depth_min": dmin, "depth_max": dmax}))
    save_cameras_json(cameras, out_dir / "edit_cameras.json")
    save_ply(coarse, out_dir / "coarse_prior.ply")
    manifest = {"config_hash": config_hash(cfg), "n_views": len(bundles),
                "arcs": [{"side": s, "n": n} for s, n in spans],
                "prompt": cfg["prompt"], "seed": cfg["seed"]}
    (out_dir / "bundles_manifest.json").write_text(json.dumps(manifest, indent=2))
    return out_dir


def load_bundles(out_dir: Path) -> tuple[list[ViewBundle], dict]:
    mpath = out_dir / "bundles_manifest.json"
    if not mpath.exists():
        raise ConfigError(f"no bundles manifest under {out_dir}; run extract first")
    manifest = json.loads(mpath.read_text())
    bundles = []
    for i in range(manifest["n_views"]):
        stem = out_dir / "bundles" / f"view_{i:03d}"
        cam = Camera.from_json_dict(json.loads(Path(f"{stem}.camera.json").read_text()))
        mask = decode_mask_png(Path(f"{stem}.mask.png").read_bytes())
        bundles.append(ViewBundle(cam, load_pfm(f"{stem}.background.pfm"),
                                  mask, load_pfm(f"{stem}.depth.pfm")))
    return bundles, manifest


def stage_inpaint(cfg: dict) -> Path:
    out_dir = Path(cfg["output_dir"])
    bundles, manifest = load_bundles(out_dir)
    idir = out_dir / "inpainted"
    idir.mkdir(exist_ok=True)

    offset = 0
    images = []
    hidden = None
    for arc in manifest["arcs"]:
        arc_bundles = bundles[offset:offset + arc["n"]]
        request = InpaintRequest(arc_bundles, cfg["prompt"],
                                 conditioning_view_index=(len(arc_bundles) - 1) // 2,
                                 seed=cfg["seed"])
        response = inpaint(request, endpoint=cfg["endpoint"])
        images.extend(response.images)
        if response.hidden_object is not None:
            hidden = response.hidden_object
        offset += arc["n"]

    for i, img in enumerate(images):
        save_pfm(img, idir / f"view_{i:03d}.pfm")
        save_png(img, idir / f"view_{i:03d}.png")
    if hidden is not None:
        save_ply(hidden, idir / "hidden_object.ply")
    (out_dir / "inpaint_manifest.json").write_text(json.dumps(
        {"config_hash": config_hash(cfg), "endpoint": cfg["endpoint"],
         "n_views": len(images), "prompt": cfg["prompt"], "seed": cfg["seed"],
         "has_hidden_object": hidden is not None}, indent=2))
    return idir


def _load_supervision(cfg: dict, scene: GaussianScene,
                      bbox: OrientedBBox) -> SupervisionSet:
    out_dir = Path(cfg["output_dir"])
    bundles, _ = load_bundles(out_dir)
    ipath = out_dir / "inpaint_manifest.json"
    if not ipath.exists():
        raise ConfigError(f"no inpainted views under {out_dir}; run inpaint first")
    n = json.loads(ipath.read_text())["n_views"]
    edited = [EditedView(bundles[i].camera,
                         load_pfm(out_dir / "inpainted" / f"view_{i:03d}.pfm"))
              for i in range(n)]
    training = []
    bg = tuple(cfg["background"])
    for cam in _training_cameras(cfg, scene):
        img = render_fast(scene, cam, bg).color
        training.append(TrainingView(cam, img, project_bbox_mask(bbox, cam)))
    return SupervisionSet(edited_views=edited, training_views=training)


def stage_reconstruct(cfg: dict) -> Path:
    scene, bbox, out_dir = _require_inputs(cfg)
    supervision = _load_supervision(cfg, scene, bbox)
    train_cfg = TrainConfig.from_dict(cfg["train"])

    if cfg.get("initial_scene", "original+prior") == "original+prior":
        prior = seed_coarse_prior(bbox, cfg["coarse_prior"]["n_gaussians"], cfg["seed"])
        initial = GaussianScene.concatenate(scene, prior)
    else:
        initial = scene

    edited = finetune(initial, supervision, train_cfg,
                      log_file=out_dir / "train_log.jsonl",
                      checkpoint_dir=out_dir)
    save_checkpoint(edited, out_dir / "edited.ply", train_cfg, train_cfg.iterations)
    (out_dir / "reconstruct_manifest.json").write_text(json.dumps(
        {"config_hash": config_hash(cfg), "iterations": train_cfg.iterations,
         "final_count": edited.count}, indent=2))
    return out_dir / "edited.ply"


def stage_evaluate(cfg: dict) -> Path:
    scene, bbox, out_dir = _require_inputs(cfg)
    edited_path = out_dir / "edited.ply"
    if not edited_path.exists():
        raise ConfigError(f"no edited scene at {edited_path}; run reconstruct first")
    edited = load_ply(edited_path)
    bundles, _ = load_bundles(out_dir)
    n = json.loads((out_dir / "inpaint_manifest.json").read_text())["n_views"]
    targets = [(bundles[i].camera,
                load_pfm(out_dir / "inpainted" / f"view_{i:03d}.pfm"))
               for i in range(n)]
    bg = tuple(cfg["background"])

    consistency = consistency_eval(edited, targets, background=bg,
                                   metadata={"config_hash": config_hash(cfg)})
    consistency.save_json(out_dir / "report_consistency.json")
    consistency.save_csv(out_dir / "report_consistency.csv")

    tcams = _training_cameras(cfg, scene)
    masks = [project_bbox_mask(bbox, c) for c in tcams]
    fidelity = background_fidelity_eval(scene, edited, tcams, masks, background=bg,
                                        metadata={"config_hash": config_hash(cfg)})
    fidelity.save_json(out_dir / "report_background.json")
    fidelity.save_csv(out_dir / "report_background.csv")

    sheet_rows = [[render_fast(edited, cam, bg).color, target]
                  for cam, target in targets[:4]]
    if sheet_rows:
        contact_sheet(sheet_rows, out_dir / "contact_sheet.png")
    return out_dir


# --------------------------------------------------------------- click

_CONFIG_OPT = click.option("--config", "config_path", type=str, default=None,
                           help="pipeline config JSON")
_COMMON = [
    click.option("--output-dir", type=str, default=None),
    click.option("--scene-ply", type=str, default=None),
    click.option("--bbox-json", type=str, default=None),
    click.option("--seed", type=int, default=None),
    click.option("--endpoint", type=str, default=None),
    click.option("--prompt", type=str, default=None),
]


def _common_opts(f):
    f = _CONFIG_OPT(f)
    for opt in _COMMON:
        f = opt(f)
    return f


def _overrides(output_dir, scene_ply, bbox_json, seed, endpoint, prompt) -> dict:
    return {"output_dir": output_dir, "scene_ply": scene_ply, "bbox_json": bbox_json,
            "seed": seed, "endpoint": endpoint, "prompt": prompt}


def _run(stage, config_path, **kw) -> None:
    iterations = kw.pop("iterations", None)
    try:
        cfg = load_config(config_path, _overrides(**kw))
        if iterations is not None:
            cfg["train"]["iterations"] = iterations
        result = stage(cfg)
        click.echo(f"ok: {result}")
    except (ConfigError, ParameterError) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except (TransportError, ProtocolError) as e:
        click.echo(f"transport error: {e}", err=True)
        sys.exit(EXIT_TRANSPORT)
    except TrainingDivergedError as e:
        click.echo(f"training diverged: {e}", err=True)
        sys.exit(EXIT_DIVERGED)
    except SplateditError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)


@click.group()
def main():
    """splatedit: object insertion for Gaussian Splatting scenes."""


@main.command("sample-pointcloud")
@click.argument("scene_ply", type=str)
@click.argument("out_json", type=str)
@click.option("--max-points", type=int, default=100000)
def cmd_sample_pointcloud(scene_ply, out_json, max_points):
    """Export a downsampled point cloud for the placement UI."""
    try:
        scene = load_ply(scene_ply)
        cloud = sample_point_cloud(scene, max_points)
        Path(out_json).write_text(json.dumps(cloud.to_json_dict()))
        click.echo(f"ok: {out_json} ({len(cloud.points)} points)")
    except FileNotFoundError as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except SplateditError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_CONFIG)


@main.command("extract")
@_common_opts
def cmd_extract(config_path, **kw):
    """Seed the coarse prior and write per-view bundles."""
    _run(stage_extract, config_path, **kw)


@main.command("inpaint")
@_common_opts
def cmd_inpaint(config_path, **kw):
    """Send bundles to the inpainting endpoint (or mock)."""
    _run(stage_inpaint, config_path, **kw)


@main.command("reconstruct")
@_common_opts
@click.option("--iterations", type=int, default=None)
def cmd_reconstruct(config_path, iterations, **kw):
    """Finetune the scene against inpainted + training views."""
    _run(stage_reconstruct, config_path, iterations=iterations, **kw)


@main.command("evaluate")
@_common_opts
def cmd_evaluate(config_path, **kw):
    """Write consistency and background-fidelity reports."""
    _run(stage_evaluate, config_path, **kw)


@main.command("run-all")
@_common_opts
@click.option("--iterations", type=int, default=None)
def cmd_run_all(config_path, iterations, **kw):
    """extract + inpaint + reconstruct + evaluate in sequence."""
    def all_stages(cfg):
        stage_extract(cfg)
        stage_inpaint(cfg)
        stage_reconstruct(cfg)
        return stage_evaluate(cfg)
    _run(all_stages, config_path, iterations=iterations, **kw)


if __name__ == "__main__":
    main()
