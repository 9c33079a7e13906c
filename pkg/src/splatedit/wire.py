"""Inpainting wire protocol, version 1.

One JSON document per request/response; images ride as base64 PNG
strings.  Endpoints: ``POST /v1/inpaint`` and ``GET /v1/health``.

Request::

    {
      "version": "1",
      "prompt": str,
      "seed": int,
      "conditioning_view_index": int,
      "views": [
        {
          "camera": {fx, fy, cx, cy, width, height,
                     world_to_camera: [[...4] x 4]},
          "background_png": base64 (8-bit RGB),
          "mask_png": base64 (1-bit),
          "depth_png": base64 (16-bit grayscale),
          "depth_min": float, "depth_max": float
        }, ...
      ]
    }

Response::

    {
      "version": "1",
      "seed": int,
      "images_png": [base64 (8-bit RGB) per view, request order],
      "hidden_object_ply": base64 PLY | absent   (test-only channel the
            mock uses to expose its ground-truth object)
    }

The depth channel carries metric values scaled over [depth_min,
depth_max] so a server can apply whatever normalization its model
expects.  Mask semantics: 1 marks the editing region to fill.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .cameras import Camera
from .errors import ProtocolError
from .images import (decode_depth_png, decode_mask_png, decode_png,
                     encode_depth_png, encode_mask_png, encode_png)

WIRE_VERSION = "1"
INPAINT_PATH = "/v1/inpaint"
HEALTH_PATH = "/v1/health"


@dataclass
class WireView:
    """Decoded per-view payload on the server side of the protocol."""

    camera: Camera
    background: NDArray[np.float64]  # (H, W, 3) in [0, 1]
    mask: NDArray[np.bool_]          # (H, W)
    depth: NDArray[np.float64]       # (H, W) metric


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def _unb64(text: str, what: str) -> bytes:
    try:
        return base64.b64decode(text.encode("ascii"), validate=True)
    except Exception as e:
        raise ProtocolError(f"invalid base64 in {what}: {e}") from e


def encode_request(views: list, prompt: str, seed: int,
                   conditioning_view_index: int) -> dict:
    """Build the request document from (camera, background, mask, depth) views."""
    out = []
    for v in views:
        depth_png, dmin, dmax = encode_depth_png(v.depth)
        out.append({
            "camera": v.camera.to_json_dict(),
            "background_png": _b64(encode_png(v.background)),
            "mask_png": _b64(encode_mask_png(v.mask)),
            "depth_png": _b64(depth_png),
            "depth_min": dmin,
            "depth_max": dmax,
        })
    return {"version": WIRE_VERSION, "prompt": prompt, "seed": int(seed),
            "conditioning_view_index": int(conditioning_view_index), "views": out}


def decode_request(doc: dict) -> tuple[list[WireView], str, int, int]:
    """Parse and validate a request document (server side)."""
    if not isinstance(doc, dict) or doc.get("version") != WIRE_VERSION:
        raise ProtocolError(f"unsupported or missing wire version: {doc.get('version')!r}")
    for key in ("prompt", "seed", "conditioning_view_index", "views"):
        if key not in doc:
            raise ProtocolError(f"request missing field {key!r}")
    views = doc["views"]
    if not isinstance(views, list) or not views:
        raise ProtocolError("request carries no views")
    idx = int(doc["conditioning_view_index"])
    if not (0 <= idx < len(views)):
        raise ProtocolError("conditioning_view_index out of range")
    decoded = []
    for i, v in enumerate(views):
        try:
            camera = Camera.from_json_dict(v["camera"])
        except Exception as e:
            raise ProtocolError(f"view {i}: bad camera: {e}") from e
        background = decode_png(_unb64(v["background_png"], f"view {i} background"))
        mask = decode_mask_png(_unb64(v["mask_png"], f"view {i} mask"))
        depth = decode_depth_png(_unb64(v["depth_png"], f"view {i} depth"),
                                 float(v["depth_min"]), float(v["depth_max"]))
        shape = (camera.height, camera.width)
        if background.shape[:2] != shape or mask.shape != shape or depth.shape != shape:
            raise ProtocolError(f"view {i}: image sizes disagree with camera")
        decoded.append(WireView(camera, background, mask, depth))
    return decoded, str(doc["prompt"]), int(doc["seed"]), idx


def encode_response(images: list[NDArray], seed: int,
                    hidden_object_ply: bytes | None = None) -> dict:
    doc = {"version": WIRE_VERSION, "seed": int(seed),
           "images_png": [_b64(encode_png(img)) for img in images]}
    if hidden_object_ply is not None:
        doc["hidden_object_ply"] = _b64(hidden_object_ply)
    return doc


def decode_response(doc: dict, expected_views: int) -> tuple[list[NDArray], bytes | None]:
    if not isinstance(doc, dict) or doc.get("version") != WIRE_VERSION:
        raise ProtocolError(f"unsupported response version: {doc.get('version')!r}")
    pngs = doc.get("images_png")
    if not isinstance(pngs, list):
        raise ProtocolError("response missing images_png")
    if len(pngs) != expected_views:
        raise ProtocolError(
            f"response has {len(pngs)} images for {expected_views} requested views")
    images = [decode_png(_unb64(p, f"response image {i}")) for i, p in enumerate(pngs)]
    for i, img in enumerate(images):
        if img.ndim != 3 or img.shape[2] != 3:
            raise ProtocolError(f"response image {i} is not RGB")
    hidden = doc.get("hidden_object_ply")
    return images, (_unb64(hidden, "hidden_object_ply") if hidden else None)
