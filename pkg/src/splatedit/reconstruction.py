"""Losses and mask-aware finetuning of a Gaussian scene.

The reconstruction objective is the weighted sum

    loss = (1 - lambda) * mean|render - target| + lambda * (1 - SSIM)

applied full-frame on inpainted views and on mask-complement-multiplied
images for the original training views, so supervised pixels under the
editing mask contribute exactly through the zeroed product.  Training
uses per-parameter Adam with the reference Gaussian Splatting learning
rates and periodic clone/split/prune density control driven by averaged
screen-space positional gradients.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from scipy.ndimage import correlate1d

from .cameras import Camera, quat_to_matrix
from .errors import ParameterError, SceneDataError, TrainingDivergedError
from .images import same_shape
from .rasterizer import render_backward, render_fast
from .scene import GaussianScene, save_ply

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _ssim_kernel() -> NDArray[np.float64]:
    x = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    k = np.exp(-(x ** 2) / (2.0 * SSIM_SIGMA ** 2))
    return k / k.sum()


_KERNEL = _ssim_kernel()


def _blur(img: NDArray) -> NDArray:
    # zero-padded separable window; symmetric kernel makes this self-adjoint
    out = correlate1d(img, _KERNEL, axis=0, mode="constant", cval=0.0)
    return correlate1d(out, _KERNEL, axis=1, mode="constant", cval=0.0)


def _ssim_terms(a: NDArray, b: NDArray):
    mu1, mu2 = _blur(a), _blur(b)
    s1 = _blur(a * a) - mu1 * mu1
    s2 = _blur(b * b) - mu2 * mu2
    s12 = _blur(a * b) - mu1 * mu2
    n1 = 2.0 * mu1 * mu2 + SSIM_C1
    n2 = 2.0 * s12 + SSIM_C2
    d1 = mu1 * mu1 + mu2 * mu2 + SSIM_C1
    d2 = s1 + s2 + SSIM_C2
    return mu1, mu2, s12, n1, n2, d1, d2


def ssim(a: NDArray, b: NDArray) -> float:
    """Mean structural similarity, 11x11 Gaussian window (sigma 1.5).

    Window sums use zero padding, and the map is averaged over every
    pixel and channel, matching the convention of the optimization code
    this loss is lifted from.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    same_shape(a, b)
    _, _, _, n1, n2, d1, d2 = _ssim_terms(a, b)
    return float(np.mean(n1 * n2 / (d1 * d2)))


def ssim_with_grad(a: NDArray, b: NDArray) -> tuple[float, NDArray]:
    """SSIM value plus its gradient with respect to the first image."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    same_shape(a, b)
    if np.array_equal(a, b):
        # the exact maximum: value 1, gradient identically zero (avoids
        # cancellation noise that a scale-free optimizer would amplify)
        return 1.0, np.zeros_like(a)
    mu1, mu2, s12, n1, n2, d1, d2 = _ssim_terms(a, b)
    inv = 1.0 / (d1 * d2)
    adj = np.full(a.shape, 1.0 / a.size)   # d mean / d map
    d_n1 = adj * n2 * inv
    d_n2 = adj * n1 * inv
    d_d1 = -adj * n1 * n2 * inv / d1
    d_d2 = -adj * n1 * n2 * inv / d2
    d_mu1 = d_n1 * 2.0 * mu2 + d_d1 * 2.0 * mu1
    d_s1 = d_d2
    d_s12 = d_n2 * 2.0
    # s1 = blur(a^2) - mu1^2 and s12 = blur(ab) - mu1 mu2
    d_mu1 = d_mu1 - 2.0 * mu1 * d_s1 - mu2 * d_s12
    grad = _blur(d_mu1) + 2.0 * a * _blur(d_s1) + b * _blur(d_s12)
    value = float(np.mean(n1 * n2 * inv))
    return value, grad


@dataclass
class LossResult:
    loss: float
    grad: NDArray[np.float64]  # d loss / d render, same shape as the render
    l1: float
    ssim_value: float


def l_gs(render_img: NDArray, target: NDArray, lam: float = 0.2) -> LossResult:
    """Weighted L1 + (1 - SSIM) reconstruction loss with its image gradient."""
    render_img = np.asarray(render_img, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    same_shape(render_img, target)
    diff = render_img - target
    l1 = float(np.mean(np.abs(diff)))
    g_l1 = np.sign(diff) / diff.size
    s_val, g_ssim = ssim_with_grad(render_img, target)
    loss = (1.0 - lam) * l1 + lam * (1.0 - s_val)
    grad = (1.0 - lam) * g_l1 - lam * g_ssim
    return LossResult(loss=loss, grad=grad, l1=l1, ssim_value=s_val)


@dataclass
class EditedView:
    """Inpainted viewpoint supervised full-frame."""

    camera: Camera
    target: NDArray[np.float64]


@dataclass
class TrainingView:
    """Original viewpoint supervised on the mask complement."""

    camera: Camera
    image: NDArray[np.float64]
    mask: NDArray[np.bool_]

    def __post_init__(self):
        if self.mask.shape != self.image.shape[:2]:
            raise ParameterError("mask size does not match image")


@dataclass
class SupervisionSet:
    edited_views: list[EditedView] = field(default_factory=list)
    training_views: list[TrainingView] = field(default_factory=list)

    def __post_init__(self):
        if not self.edited_views and not self.training_views:
            raise ParameterError("supervision set is empty")

    def __len__(self) -> int:
        return len(self.edited_views) + len(self.training_views)


def l_rec(render_img: NDArray, view: EditedView | TrainingView,
          lam: float = 0.2) -> LossResult:
    """Branching reconstruction loss: full-frame for edited views,
    mask-complement product for original training views."""
    if isinstance(view, EditedView):
        return l_gs(render_img, view.target, lam)
    keep = (~view.mask).astype(np.float64)[..., None]
    res = l_gs(np.asarray(render_img, dtype=np.float64) * keep, view.image * keep, lam)
    return LossResult(loss=res.loss, grad=res.grad * keep, l1=res.l1,
                      ssim_value=res.ssim_value)


@dataclass
class TrainConfig:
    """Every optimizer, schedule, and densification knob.

    Learning rates and densification defaults follow the reference
    Gaussian Splatting optimizer; the position rate is multiplied by
    `scene_extent` and decays exponentially to its final value over
    `iterations` steps.  `scene_extent` defaults to the supervision
    cameras' bounding-sphere radius (times 1.1) when left at None.
    Opacity resets are disabled by default: desk-scale runs are an
    order of magnitude shorter than the schedule they come from.
    """

    lambda_ssim: float = 0.2
    iterations: int = 30000
    lr_position: float = 0.00016
    lr_position_final: float = 0.0000016
    lr_rotation: float = 0.001
    lr_scale: float = 0.005
    lr_opacity: float = 0.025
    lr_color: float = 0.0025
    densify_interval: int = 100
    densify_from: int = 500
    densify_until: Optional[int] = None     # default iterations // 2
    densify_grad_threshold: float = 0.0002
    opacity_prune_threshold: float = 0.005
    percent_dense: float = 0.01
    opacity_reset_interval: int = 0         # 0 disables
    scene_extent: Optional[float] = None
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    edited_oversample: float = 1.0
    seed: int = 0
    log_interval: int = 50
    checkpoint_interval: int = 0            # 0 disables periodic checkpoints

    def __post_init__(self):
        if not (0.0 <= self.lambda_ssim <= 1.0):
            raise ParameterError("lambda_ssim must lie in [0, 1]")
        if self.iterations < 0:
            raise ParameterError("iterations must be >= 0")
        for name in ("densify_interval", "densify_grad_threshold",
                     "opacity_prune_threshold", "percent_dense"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["background"] = list(self.background)
        return d

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        d = dict(d)
        if "background" in d:
            d["background"] = tuple(d["background"])
        return TrainConfig(**d)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def default_scene_extent(cameras: list[Camera]) -> float:
    centers = np.stack([c.position for c in cameras])
    centroid = centers.mean(axis=0)
    radius = float(np.linalg.norm(centers - centroid, axis=1).max())
    return max(radius * 1.1, 1e-6)


def position_lr(config: TrainConfig, extent: float, step: int) -> float:
    """Exponential decay from lr_position to lr_position_final."""
    if config.iterations <= 1:
        return config.lr_position * extent
    t = np.clip(step / config.iterations, 0.0, 1.0)
    return float(np.exp((1 - t) * np.log(config.lr_position * extent)
                        + t * np.log(config.lr_position_final * extent)))


class _Params:
    """Float64 master copies of the scene parameters plus Adam moments."""

    FIELDS = ("positions", "rotations", "log_scales", "opacity_logits", "sh_coeffs")
    BETA1, BETA2, EPS = 0.9, 0.999, 1e-15

    def __init__(self, scene: GaussianScene):
        self.values = {f: getattr(scene, f).astype(np.float64) for f in self.FIELDS}
        self.m = {f: np.zeros_like(v) for f, v in self.values.items()}
        self.v = {f: np.zeros_like(v) for f, v in self.values.items()}
        self.step = 0

    def scene(self) -> GaussianScene:
        return GaussianScene(**{f: v.astype(np.float32) for f, v in self.values.items()})

    def adam_step(self, grads: dict, lrs: dict) -> None:
        self.step += 1
        b1c = 1.0 - self.BETA1 ** self.step
        b2c = 1.0 - self.BETA2 ** self.step
        for f in self.FIELDS:
            g = grads[f]
            self.m[f] = self.BETA1 * self.m[f] + (1 - self.BETA1) * g
            self.v[f] = self.BETA2 * self.v[f] + (1 - self.BETA2) * g * g
            update = lrs[f] * (self.m[f] / b1c) / (np.sqrt(self.v[f] / b2c) + self.EPS)
            self.values[f] -= update
        # keep quaternions on the unit sphere; rows already unit are left
        # untouched so an exact stationary point stays a fixed point
        q = self.values["rotations"]
        norms = np.linalg.norm(q, axis=1, keepdims=True)
        # 2e-7 skip window: above float32 unit-quaternion noise, far below
        # the 1e-6 scene invariant
        needs = (np.abs(norms - 1.0) > 2e-7)[:, 0]
        if needs.any():
            q = q.copy()
            q[needs] = q[needs] / norms[needs]
            self.values["rotations"] = q

    def apply_mask(self, keep: NDArray[np.bool_]) -> None:
        for f in self.FIELDS:
            self.values[f] = self.values[f][keep]
            self.m[f] = self.m[f][keep]
            self.v[f] = self.v[f][keep]

    def append(self, new_values: dict) -> None:
        for f in self.FIELDS:
            nv = new_values[f].astype(np.float64)
            self.values[f] = np.concatenate([self.values[f], nv])
            self.m[f] = np.concatenate([self.m[f], np.zeros_like(nv)])
            self.v[f] = np.concatenate([self.v[f], np.zeros_like(nv)])

    @property
    def count(self) -> int:
        return len(self.values["positions"])


def _split_samples(values: dict, sel: NDArray, rng: np.random.Generator, n: int = 2):
    """Official-style split: resample inside the Gaussian, shrink by 0.8n."""
    pos = np.repeat(values["positions"][sel], n, axis=0)
    quat = np.repeat(values["rotations"][sel], n, axis=0)
    log_s = np.repeat(values["log_scales"][sel], n, axis=0)
    scales = np.exp(log_s)
    rot = quat_to_matrix(quat)
    local = rng.standard_normal(pos.shape) * scales
    new_pos = pos + np.einsum("kij,kj->ki", rot, local)
    return {
        "positions": new_pos,
        "rotations": quat,
        "log_scales": np.log(scales / (0.8 * n)),
        "opacity_logits": np.repeat(values["opacity_logits"][sel], n, axis=0),
        "sh_coeffs": np.repeat(values["sh_coeffs"][sel], n, axis=0),
    }


def _density_update(params: _Params, stats: NDArray, config: TrainConfig,
                    extent: float, rng: np.random.Generator) -> None:
    """Clone small high-gradient splats, split large ones, prune faint ones."""
    values = params.values
    max_scale = np.exp(values["log_scales"]).max(axis=1)
    size_limit = config.percent_dense * extent

    clone_sel = (stats >= config.densify_grad_threshold) & (max_scale <= size_limit)
    if clone_sel.any():
        params.append({f: values[f][clone_sel] for f in params.FIELDS})

    padded = np.zeros(params.count)
    padded[:len(stats)] = stats
    max_scale = np.exp(params.values["log_scales"]).max(axis=1)
    split_sel = (padded >= config.densify_grad_threshold) & (max_scale > size_limit)
    if split_sel.any():
        params.append(_split_samples(params.values, split_sel, rng))
        keep = np.ones(params.count, dtype=bool)
        keep[:len(split_sel)] = ~split_sel
        params.apply_mask(keep)

    opacity = 1.0 / (1.0 + np.exp(-params.values["opacity_logits"]))
    keep = opacity >= config.opacity_prune_threshold
    if not keep.all():
        params.apply_mask(keep)


def density_control(scene: GaussianScene, accumulated_pos_grads: NDArray,
                    config: TrainConfig, rng: np.random.Generator | None = None,
                    scene_extent: float | None = None) -> GaussianScene:
    """One adaptive-density step as a pure scene-to-scene operation."""
    if len(accumulated_pos_grads) != scene.count:
        raise ParameterError("gradient statistics length does not match scene")
    params = _Params(scene)
    extent = scene_extent if scene_extent is not None else \
        (config.scene_extent if config.scene_extent is not None else 1.0)
    _density_update(params, np.asarray(accumulated_pos_grads, dtype=np.float64),
                    config, extent, rng or np.random.default_rng(config.seed))
    out = params.scene()
    out.normalize_rotations()
    return out


@dataclass
class TrainLogEntry:
    iteration: int
    loss: float
    l1: float
    ssim_term: float
    count: int
    psnr_probe: float

    def to_json(self) -> str:
        return json.dumps({"iter": self.iteration, "loss": self.loss, "l1": self.l1,
                           "ssim_term": self.ssim_term, "count": self.count,
                           "psnr_probe": self.psnr_probe})


def save_checkpoint(scene: GaussianScene, path: str | Path, config: TrainConfig,
                    iteration: int) -> None:
    """Checkpoint = PLY + JSON sidecar (config echo and iteration)."""
    path = Path(path)
    save_ply(scene, path)
    sidecar = {"iteration": iteration, "config": config.to_dict(),
               "config_hash": config.config_hash()}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2))


def finetune(initial: GaussianScene, supervision: SupervisionSet,
             config: TrainConfig, log_file: str | Path | None = None,
             checkpoint_dir: str | Path | None = None) -> GaussianScene:
    """Mask-aware optimization of the scene against the supervision set.

    Each step samples one view (edited views weighted by
    `edited_oversample`), renders it, backpropagates the branching loss,
    and applies per-parameter Adam updates; every `densify_interval`
    steps inside the densification window the scene is cloned/split/
    pruned from the averaged screen-gradient statistics.  Deterministic
    given identical inputs and seed.
    """
    initial.validate()
    if config.iterations == 0:
        return initial.copy()

    views: list[EditedView | TrainingView] = list(supervision.edited_views) \
        + list(supervision.training_views)
    weights = np.array([config.edited_oversample] * len(supervision.edited_views)
                       + [1.0] * len(supervision.training_views))
    weights = weights / weights.sum()
    cameras = [v.camera for v in views]
    extent = config.scene_extent if config.scene_extent is not None \
        else default_scene_extent(cameras)
    densify_until = config.densify_until if config.densify_until is not None \
        else config.iterations // 2

    rng_view = np.random.default_rng([config.seed, 1])
    rng_split = np.random.default_rng([config.seed, 2])
    params = _Params(initial)
    grad_accum = np.zeros(params.count)
    grad_denom = np.zeros(params.count)
    bg = np.asarray(config.background, dtype=np.float64)

    log_fh = open(log_file, "w") if log_file else None
    checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
    last_checkpoint: str | None = None
    try:
        for it in range(1, config.iterations + 1):
            view = views[int(rng_view.choice(len(views), p=weights))]
            scene = params.scene()
            try:
                out = render_fast(scene, view.camera, bg)
                res = l_rec(out.color, view, config.lambda_ssim)
                diverged = not np.isfinite(res.loss)
            except SceneDataError:
                diverged = True
            if diverged:
                if checkpoint_dir is not None:
                    try:
                        path = checkpoint_dir / f"diverged_{it:06d}.ply"
                        save_checkpoint(scene, path, config, it)
                        last_checkpoint = str(path)
                    except SceneDataError:
                        pass  # parameters already non-finite; keep the last good one
                raise TrainingDivergedError(it, last_checkpoint)
            g = render_backward(scene, view.camera, bg, res.grad)

            lrs = {"positions": position_lr(config, extent, it),
                   "rotations": config.lr_rotation,
                   "log_scales": config.lr_scale,
                   "opacity_logits": config.lr_opacity,
                   "sh_coeffs": config.lr_color}
            grads = {"positions": g.positions, "rotations": g.rotations,
                     "log_scales": g.log_scales, "opacity_logits": g.opacity_logits,
                     "sh_coeffs": g.sh_coeffs}
            params.adam_step(grads, lrs)

            grad_accum += g.screen_grad
            grad_denom += g.visible

            if (config.densify_from <= it <= densify_until
                    and it % config.densify_interval == 0):
                stats = np.where(grad_denom > 0, grad_accum / np.maximum(grad_denom, 1), 0.0)
                _density_update(params, stats, config, extent, rng_split)
                grad_accum = np.zeros(params.count)
                grad_denom = np.zeros(params.count)

            if (config.opacity_reset_interval > 0
                    and it % config.opacity_reset_interval == 0 and it <= densify_until):
                logits = params.values["opacity_logits"]
                limit = np.log(0.01 / 0.99)  # logit of 0.01
                params.values["opacity_logits"] = np.minimum(logits, limit)
                params.m["opacity_logits"][:] = 0.0
                params.v["opacity_logits"][:] = 0.0

            if log_fh and (it % config.log_interval == 0 or it == config.iterations):
                target = view.target if isinstance(view, EditedView) else view.image
                mse = float(np.mean((out.color - target) ** 2))
                probe = 99.0 if mse <= 1e-12 else float(10.0 * np.log10(1.0 / mse))
                entry = TrainLogEntry(it, res.loss, res.l1, 1.0 - res.ssim_value,
                                      params.count, probe)
                log_fh.write(entry.to_json() + "\n")

            if (checkpoint_dir is not None and config.checkpoint_interval > 0
                    and it % config.checkpoint_interval == 0):
                path = checkpoint_dir / f"checkpoint_{it:06d}.ply"
                save_checkpoint(params.scene(), path, config, it)
                last_checkpoint = str(path)
    finally:
        if log_fh:
            log_fh.close()

    final = params.scene()
    final.normalize_rotations()
    final.validate()
    return final
