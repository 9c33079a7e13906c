"""Float image helpers and file export.

Images are plain numpy arrays: RGB is (H, W, 3) float64 in [0, 1],
masks are (H, W) bool, depth maps are (H, W) float64 in world units
with 0 as the "undefined" sentinel.  Exports:

* 8-bit PNG for RGB and grayscale (values clamped to [0, 1]).
* 1-bit PNG for masks.
* 16-bit PNG for depth, linearly scaled over [min, max]; callers keep
  the (min, max) pair in a JSON sidecar so metric depth is recoverable.
* PFM (Pf/PF, little-endian) for lossless float dumps.
"""

from __future__ import annotations

import io
import json
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import ParameterError


def validate_rgb(img: np.ndarray, name: str = "image") -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ParameterError(f"{name} must have shape (H, W, 3), got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ParameterError(f"{name} contains non-finite values")
    return img


def same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ParameterError(f"image shapes differ: {a.shape} vs {b.shape}")


def encode_png(img: np.ndarray) -> bytes:
    """8-bit PNG bytes from an RGB or grayscale float image in [0, 1]."""
    arr = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    data = np.round(arr * 255.0).astype(np.uint8)
    mode = "RGB" if data.ndim == 3 else "L"
    buf = io.BytesIO()
    PILImage.fromarray(data, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """Float image in [0, 1] from 8-bit PNG bytes (RGB kept as (H, W, 3))."""
    img = PILImage.open(io.BytesIO(data))
    if img.mode not in ("L", "RGB"):
        img = img.convert("RGB")
    return np.asarray(img, dtype=np.float64) / 255.0


def encode_mask_png(mask: np.ndarray) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(np.asarray(mask, dtype=bool)).save(buf, format="PNG", bits=1)
    return buf.getvalue()


def decode_mask_png(data: bytes) -> np.ndarray:
    img = PILImage.open(io.BytesIO(data)).convert("L")
    return np.asarray(img) > 127


def encode_depth_png(depth: np.ndarray) -> tuple[bytes, float, float]:
    """16-bit PNG plus the (min, max) scale needed to undo the quantization."""
    depth = np.asarray(depth, dtype=np.float64)
    dmin = float(depth.min()) if depth.size else 0.0
    dmax = float(depth.max()) if depth.size else 0.0
    span = dmax - dmin
    scaled = np.zeros_like(depth) if span <= 0 else (depth - dmin) / span
    data = np.round(scaled * 65535.0).astype(np.uint16)
    buf = io.BytesIO()
    img = PILImage.frombytes("I;16", (data.shape[1], data.shape[0]),
                             data.astype("<u2").tobytes())
    img.save(buf, format="PNG")
    return buf.getvalue(), dmin, dmax


def decode_depth_png(data: bytes, dmin: float, dmax: float) -> np.ndarray:
    img = PILImage.open(io.BytesIO(data))
    arr = np.asarray(img, dtype=np.float64) / 65535.0
    return arr * (dmax - dmin) + dmin


def save_png(img: np.ndarray, path: str | Path) -> None:
    Path(path).write_bytes(encode_png(img))


def save_mask_png(mask: np.ndarray, path: str | Path) -> None:
    Path(path).write_bytes(encode_mask_png(mask))


def save_depth_png(depth: np.ndarray, path: str | Path) -> tuple[float, float]:
    """Writes <path> and a <path>.json sidecar with the depth range."""
    data, dmin, dmax = encode_depth_png(depth)
    path = Path(path)
    path.write_bytes(data)
    Path(str(path) + ".json").write_text(json.dumps({"depth_min": dmin, "depth_max": dmax}))
    return dmin, dmax


def load_depth_png(path: str | Path) -> np.ndarray:
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    return decode_depth_png(Path(path).read_bytes(), sidecar["depth_min"], sidecar["depth_max"])


def save_pfm(img: np.ndarray, path: str | Path) -> None:
    """Lossless float32 dump; 'PF' for 3-channel, 'Pf' for single-channel."""
    arr = np.asarray(img, dtype=np.float32)
    if arr.ndim == 2:
        header = "Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        header = "PF"
    else:
        raise ParameterError(f"PFM supports (H, W) or (H, W, 3), got {arr.shape}")
    h, w = arr.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"{header}\n{w} {h}\n-1.0\n".encode("ascii"))
        fh.write(arr[::-1].astype("<f4").tobytes())  # PFM rows are bottom-up


def load_pfm(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        if header not in ("PF", "Pf"):
            raise ParameterError(f"not a PFM file: magic {header!r}")
        w, h = (int(v) for v in fh.readline().split())
        scale = float(fh.readline())
        count = w * h * (3 if header == "PF" else 1)
        data = np.frombuffer(fh.read(count * 4), dtype="<f4" if scale < 0 else ">f4")
    shape = (h, w, 3) if header == "PF" else (h, w)
    return data.reshape(shape)[::-1].astype(np.float64)


def normalized_depth(depth: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Depth scaled to [0, 1] plus the (min, max) used, for PNG previews."""
    depth = np.asarray(depth, dtype=np.float64)
    dmin = float(depth.min()) if depth.size else 0.0
    dmax = float(depth.max()) if depth.size else 0.0
    if dmax - dmin <= 0:
        return np.zeros_like(depth), dmin, dmax
    return (depth - dmin) / (dmax - dmin), dmin, dmax
