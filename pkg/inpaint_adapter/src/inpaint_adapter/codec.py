"""Standalone decoder/encoder for the inpainting wire protocol (v1).

Implemented from the protocol document shipped with the pipeline repo
(docs/protocol.md); deliberately independent of the client codebase so
the wire format itself is the only coupling.
"""

from __future__ import annotations

import base64
import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

WIRE_VERSION = "1"


class RequestError(ValueError):
    """Malformed request payload; maps to HTTP 400."""


@dataclass
class View:
    """One decoded view of an inpainting request."""

    camera: dict
    background: np.ndarray  # (H, W, 3) float in [0, 1]
    mask: np.ndarray        # (H, W) bool
    depth: np.ndarray       # (H, W) float, metric
    depth_min: float
    depth_max: float


def _png_bytes(field: str, text) -> bytes:
    if not isinstance(text, str):
        raise RequestError(f"{field} must be a base64 string")
    try:
        return base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as e:
        raise RequestError(f"{field} is not valid base64: {e}") from e


def _decode_rgb(data: bytes, field: str) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data)).convert("RGB")
    except Exception as e:
        raise RequestError(f"{field} is not a decodable PNG: {e}") from e
    return np.asarray(img, dtype=np.float64) / 255.0


def _decode_mask(data: bytes, field: str) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data)).convert("L")
    except Exception as e:
        raise RequestError(f"{field} is not a decodable PNG: {e}") from e
    return np.asarray(img) > 127


def _decode_depth(data: bytes, dmin: float, dmax: float, field: str) -> np.ndarray:
    try:
        img = Image.open(io.BytesIO(data))
    except Exception as e:
        raise RequestError(f"{field} is not a decodable PNG: {e}") from e
    arr = np.asarray(img, dtype=np.float64) / 65535.0
    return arr * (dmax - dmin) + dmin


def decode_request(doc) -> tuple[list[View], str, int, int]:
    if not isinstance(doc, dict):
        raise RequestError("request body must be a JSON object")
    if doc.get("version") != WIRE_VERSION:
        raise RequestError(f"unsupported wire version {doc.get('version')!r}; "
                           f"this server speaks version {WIRE_VERSION}")
    for key in ("prompt", "seed", "conditioning_view_index", "views"):
        if key not in doc:
            raise RequestError(f"missing request field {key!r}")
    raw_views = doc["views"]
    if not isinstance(raw_views, list) or not raw_views:
        raise RequestError("request carries no views")
    idx = int(doc["conditioning_view_index"])
    if not (0 <= idx < len(raw_views)):
        raise RequestError("conditioning_view_index out of range")

    views: list[View] = []
    for i, rv in enumerate(raw_views):
        if not isinstance(rv, dict):
            raise RequestError(f"view {i} must be an object")
        for key in ("camera", "background_png", "mask_png", "depth_png",
                    "depth_min", "depth_max"):
            if key not in rv:
                raise RequestError(f"view {i} missing field {key!r}")
        cam = rv["camera"]
        if not isinstance(cam, dict) or "width" not in cam or "height" not in cam:
            raise RequestError(f"view {i}: camera must carry width/height")
        shape = (int(cam["height"]), int(cam["width"]))
        background = _decode_rgb(_png_bytes(f"view {i} background_png",
                                            rv["background_png"]), f"view {i} background")
        mask = _decode_mask(_png_bytes(f"view {i} mask_png", rv["mask_png"]),
                            f"view {i} mask")
        depth = _decode_depth(_png_bytes(f"view {i} depth_png", rv["depth_png"]),
                              float(rv["depth_min"]), float(rv["depth_max"]),
                              f"view {i} depth")
        if background.shape[:2] != shape or mask.shape != shape or depth.shape != shape:
            raise RequestError(f"view {i}: image sizes disagree with camera")
        views.append(View(cam, background, mask, depth,
                          float(rv["depth_min"]), float(rv["depth_max"])))
    return views, str(doc["prompt"]), int(doc["seed"]), idx


def encode_response(images: list[np.ndarray], seed: int) -> dict:
    pngs = []
    for img in images:
        data = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(data, mode="RGB").save(buf, format="PNG")
        pngs.append(base64.b64encode(buf.getvalue()).decode("ascii"))
    return {"version": WIRE_VERSION, "seed": int(seed), "images_png": pngs}
