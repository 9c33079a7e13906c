"""Model backends behind the adapter.

A backend receives the decoded views plus the stacked hint tensors and
returns one RGB image per view.  The shipped "echo" backend simply
returns each view's background, which is enough to exercise the full
protocol without any model weights; real diffusion backends register
under their own name.
"""

from __future__ import annotations

from typing import Callable, Protocol

import numpy as np

from .codec import View


class Backend(Protocol):
    def __call__(self, views: list[View], hints: list[np.ndarray],
                 prompt: str, seed: int, conditioning_index: int) -> list[np.ndarray]:
        ...


def hint_tensor(view: View, depth_mode: str = "minmax") -> np.ndarray:
    """Stack (masked background, mask, depth) into an (H, W, 5) hint.

    The background is multiplied by the mask, then concatenated with the
    mask and the depth channel.  depth_mode "minmax" rescales depth to
    [0, 1] over the view's metric range; "metric" passes it through.
    """
    m = view.mask.astype(np.float64)
    masked_bg = view.background * m[..., None]
    if depth_mode == "minmax":
        span = view.depth_max - view.depth_min
        depth = (view.depth - view.depth_min) / span if span > 0 \
            else np.zeros_like(view.depth)
    elif depth_mode == "metric":
        depth = view.depth
    else:
        raise ValueError(f"unknown depth normalization mode {depth_mode!r}")
    return np.concatenate([masked_bg, m[..., None], depth[..., None]], axis=2)


def echo_backend(views: list[View], hints: list[np.ndarray], prompt: str,
                 seed: int, conditioning_index: int) -> list[np.ndarray]:
    """No-model backend: returns the backgrounds unchanged."""
    return [v.background.copy() for v in views]


_REGISTRY: dict[str, Backend] = {"echo": echo_backend}


def register_backend(name: str, backend: Backend) -> None:
    _REGISTRY[name] = backend


def get_backend(name: str) -> Backend:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown backend {name!r}; registered: {sorted(_REGISTRY)}")
