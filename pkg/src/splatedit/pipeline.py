"""Input preparation for inpainting and the service boundary.

For every editing viewpoint this assembles a `ViewBundle`: the
background render of the original scene, the box-projected editing
mask, and the depth render of the coarse geometry prior masked to the
editing region.  Bundles travel over the wire protocol to an inpainting
service; a deterministic in-process mock stands in for the real model
so the full pipeline is testable offline.

The mock places a procedural object (a seeded ellipsoid cluster of
Gaussians) inside the region implied by the masked depth hints, renders
it with the real rasterizer over each background, and returns the
hidden object alongside the images so end-to-end tests have ground
truth.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import requests
from numpy.typing import NDArray

from .cameras import (Camera, OrientedBBox, central_index, point_in_bbox,
                      project_bbox_mask)
from .errors import (EmptyEditingRegionError, ParameterError, ProtocolError,
                     TransportError)
from .rasterizer import render_fast
from .scene import SH_C0, GaussianScene, ply_bytes, scene_from_ply_bytes
from .wire import (INPAINT_PATH, WireView, decode_request, decode_response,
                   encode_request, encode_response)

RETRY_ATTEMPTS = 3
RETRY_BACKOFF = 0.5  # seconds, doubled per attempt


@dataclass
class ViewBundle:
    """Per-viewpoint inpainting conditioning payload."""

    camera: Camera
    background: NDArray[np.float64]  # (H, W, 3) RGB in [0, 1]
    mask: NDArray[np.bool_]          # (H, W) editing region
    depth: NDArray[np.float64]       # (H, W) metric, zero outside the mask

    def __post_init__(self):
        shape = (self.camera.height, self.camera.width)
        if (self.background.shape[:2] != shape or self.mask.shape != shape
                or self.depth.shape != shape):
            raise ParameterError("bundle image sizes disagree with camera")
        self.mask = np.asarray(self.mask, dtype=bool)


@dataclass
class InpaintRequest:
    bundles: list[ViewBundle]
    prompt: str
    conditioning_view_index: int
    seed: int = 0

    def __post_init__(self):
        if not self.bundles:
            raise ParameterError("request needs at least one bundle")
        if not (0 <= self.conditioning_view_index < len(self.bundles)):
            raise ParameterError("conditioning_view_index out of range")


@dataclass
class InpaintResponse:
    images: list[NDArray[np.float64]]
    # test-only channel: the mock's ground-truth object, when provided
    hidden_object: GaussianScene | None = None


def extract_view_bundles(original: GaussianScene, coarse: GaussianScene,
                         bbox: OrientedBBox, cameras: list[Camera],
                         background=(0.0, 0.0, 0.0)) -> list[ViewBundle]:
    """Render (background, mask, depth) for every editing viewpoint.

    Raises EmptyEditingRegionError when the box is invisible from every
    camera (all masks empty).
    """
    if not cameras:
        raise ParameterError("no cameras given")
    bundles = []
    for cam in cameras:
        bg = render_fast(original, cam, background).color
        mask = project_bbox_mask(bbox, cam)
        depth = render_fast(coarse, cam, background).depth * mask
        bundles.append(ViewBundle(cam, bg, mask, depth))
    if not any(b.mask.any() for b in bundles):
        raise EmptyEditingRegionError("editing box projects outside every view")
    return bundles


def seed_coarse_prior(bbox: OrientedBBox, n_gaussians: int, seed: int) -> GaussianScene:
    """Gray half-opacity blob filling the box's inscribed ellipsoid.

    Stands in for a learned coarse geometry prior: any blob with the
    right location and extent serves as the depth reference.
    """
    if n_gaussians < 1:
        raise ParameterError("n_gaussians must be >= 1")
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=(n_gaussians, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.uniform(0.0, 1.0, size=(n_gaussians, 1)) ** (1.0 / 3.0)
    local = direction * radius * bbox.half_extents
    centers = local @ bbox.rotation_matrix.T + bbox.center

    iso = 0.05 * float(np.min(bbox.half_extents))
    quats = np.zeros((n_gaussians, 4), dtype=np.float32)
    quats[:, 0] = 1.0
    return GaussianScene(
        positions=centers,
        rotations=quats,
        log_scales=np.full((n_gaussians, 3), np.log(iso)),
        opacity_logits=np.zeros(n_gaussians),
        sh_coeffs=np.zeros((n_gaussians, 1, 3)),  # SH0 zero renders 0.5 gray
    )


def composite_into_mask(background: NDArray, content: NDArray,
                        mask: NDArray) -> NDArray[np.float64]:
    """content inside the mask, the untouched background outside."""
    m = np.asarray(mask, dtype=bool)[..., None]
    return np.where(m, np.asarray(content, dtype=np.float64),
                    np.asarray(background, dtype=np.float64))


# ---------------------------------------------------------------- mock

_PALETTE = np.array([
    [0.85, 0.25, 0.20], [0.20, 0.55, 0.85], [0.95, 0.75, 0.15],
    [0.30, 0.75, 0.35], [0.75, 0.30, 0.80], [0.95, 0.50, 0.20],
    [0.25, 0.80, 0.75], [0.90, 0.35, 0.55],
])


def _mock_rng(prompt: str, seed: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{prompt}\x00{seed}".encode()).digest()
    return np.random.default_rng(np.frombuffer(digest[:16], dtype=np.uint64))


def _unproject_masked_depth(views: list[WireView]) -> NDArray[np.float64]:
    """World points of every masked pixel with a valid depth hint."""
    pts = []
    for v in views:
        sel = v.mask & (v.depth > 0)
        if not sel.any():
            continue
        rows, cols = np.nonzero(sel)
        z = v.depth[rows, cols]
        x = (cols + 0.5 - v.camera.cx) / v.camera.fx * z
        y = (rows + 0.5 - v.camera.cy) / v.camera.fy * z
        cam_pts = np.stack([x, y, z], axis=1)
        pts.append((cam_pts - v.camera.translation) @ v.camera.rotation)
    return np.concatenate(pts) if pts else np.zeros((0, 3))


def _procedural_object(center: NDArray, radii: NDArray,
                       rng: np.random.Generator, n: int = 240) -> GaussianScene:
    """Seeded two-tone ellipsoid cluster fitted to the given region."""
    base = _PALETTE[rng.integers(len(_PALETTE))]
    accent = _PALETTE[rng.integers(len(_PALETTE))]
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / 3.0)
    pos = center + direction * r * radii * 0.85
    mix = rng.uniform(0.0, 1.0, size=(n, 1))
    rgb = base * (1.0 - mix) + accent * mix
    size = float(np.mean(radii)) * rng.uniform(0.12, 0.22, size=(n, 3))
    quats = np.zeros((n, 4))
    quats[:, 0] = 1.0
    return GaussianScene(
        positions=pos,
        rotations=quats,
        log_scales=np.log(np.maximum(size, 1e-6)),
        opacity_logits=np.full(n, 2.5),
        sh_coeffs=((rgb - 0.5) / SH_C0)[:, None, :],
    )


def mock_inpainter(views: list[WireView], prompt: str,
                   seed: int) -> tuple[list[NDArray], GaussianScene | None]:
    """Deterministic stand-in for a multi-view inpainting model.

    Fits a seeded procedural object inside the region implied by the
    masked depth hints, renders it over each background, and composites
    inside the mask.  With no usable hints (all masks empty or no depth)
    the backgrounds are returned unchanged.  Returns the hidden object
    for test oracles.
    """
    pts = _unproject_masked_depth(views)
    if len(pts) == 0:
        return [v.background.copy() for v in views], None
    center = pts.mean(axis=0)
    radii = np.maximum(np.quantile(np.abs(pts - center), 0.9, axis=0), 1e-3)
    obj = _procedural_object(center, radii, _mock_rng(prompt, seed))

    images = []
    for v in views:
        out = render_fast(obj, v.camera, (0.0, 0.0, 0.0))
        over = out.color + (1.0 - out.alpha)[..., None] * v.background
        images.append(composite_into_mask(v.background, over, v.mask))
    return images, obj


def mock_serve(request_doc: dict) -> dict:
    """In-process wire-level mock endpoint (decode, inpaint, encode)."""
    views, prompt, seed, _ = decode_request(request_doc)
    images, hidden = mock_inpainter(views, prompt, seed)
    return encode_response(images, seed,
                           ply_bytes(hidden) if hidden is not None else None)


# -------------------------------------------------------------- client

def _post_with_retry(url: str, payload: dict, timeout: float,
                     sleep: Callable[[float], None] = time.sleep) -> dict:
    last: Exception | None = None
    for attempt in range(RETRY_ATTEMPTS):
        try:
            resp = requests.post(url, json=payload, timeout=timeout)
        except requests.RequestException as e:
            last = e
        else:
            if resp.status_code == 200:
                try:
                    return resp.json()
                except ValueError as e:
                    raise ProtocolError(f"service returned non-JSON body: {e}") from e
            if resp.status_code == 400:
                raise ProtocolError(f"service rejected request: {resp.text[:500]}")
            last = TransportError(f"HTTP {resp.status_code} from {url}")
        if attempt + 1 < RETRY_ATTEMPTS:
            sleep(RETRY_BACKOFF * 2 ** attempt)
    raise TransportError(f"inpainting service unreachable after "
                         f"{RETRY_ATTEMPTS} attempts: {last}")


def inpaint(request: InpaintRequest, endpoint: str = "mock",
            timeout: float = 120.0,
            sleep: Callable[[float], None] = time.sleep) -> InpaintResponse:
    """Send bundles to the inpainting service (or the mock).

    Regardless of what the service returns, pixels outside each mask
    are forced back to the bundle's own background, so edits stay
    bounded to the editing region.
    """
    payload = encode_request(request.bundles, request.prompt, request.seed,
                             request.conditioning_view_index)
    if endpoint == "mock":
        reply = mock_serve(payload)
    else:
        reply = _post_with_retry(endpoint.rstrip("/") + INPAINT_PATH, payload,
                                 timeout, sleep)
    images, hidden_ply = decode_response(reply, len(request.bundles))
    for i, (img, bundle) in enumerate(zip(images, request.bundles)):
        if img.shape != bundle.background.shape:
            raise ProtocolError(f"response image {i} has shape {img.shape}, "
                                f"expected {bundle.background.shape}")
    composited = [composite_into_mask(b.background, img, b.mask)
                  for img, b in zip(images, request.bundles)]
    hidden = scene_from_ply_bytes(hidden_ply) if hidden_ply else None
    return InpaintResponse(images=composited, hidden_object=hidden)


def conditioning_image(bundles: list[ViewBundle],
                       response: InpaintResponse) -> NDArray[np.float64]:
    """The inpainted image at the trajectory's central viewpoint."""
    if len(response.images) != len(bundles):
        raise ParameterError("response not aligned with bundles")
    return response.images[central_index(len(bundles))]
