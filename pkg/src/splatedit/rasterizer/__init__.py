"""Differentiable splat rendering: forward color/depth/alpha and gradients."""

from .backward import RenderGrad, render_backward
from .forward import RenderOutput, render, render_fast
from .projection import (DEPTH_ALPHA_EPS, FOOTPRINT_SHIFT, MAHAL_CUTOFF, T_MIN,
                         TILE, ProjectedSplats, project_gaussians)

__all__ = [
    "DEPTH_ALPHA_EPS", "FOOTPRINT_SHIFT", "MAHAL_CUTOFF", "T_MIN", "TILE",
    "ProjectedSplats", "RenderGrad", "RenderOutput",
    "project_gaussians", "render", "render_backward", "render_fast",
]
