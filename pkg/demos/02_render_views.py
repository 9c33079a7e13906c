"""Forward rendering: color, depth, and alpha from a camera orbit.

Renders the synthetic room with both the plain and the tiled path,
checks they agree, and exports PNG previews plus lossless PFM dumps.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from _room import make_room  # noqa: E402

from splatedit import render, render_fast
from splatedit.cameras import OrientedBBox, TrajectorySpec, make_trajectory
from splatedit.images import normalized_depth, save_pfm, save_png

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

room = make_room()
center = OrientedBBox(np.array([0.0, 0.0, 0.8]), np.full(3, 2.0),
                      np.array([1.0, 0, 0, 0]))
cams = make_trajectory(center, TrajectorySpec(
    n_views=4, arc_degrees=270.0, radius=5.0, elevation_degrees=22.0, side="full",
    fx=160.0, fy=160.0, width=160, height=160))

for i, cam in enumerate(cams):
    result = render_fast(room, cam, background=(0.05, 0.05, 0.08))
    save_png(result.color, out / f"room_view{i}.png")
    save_pfm(result.color, out / f"room_view{i}.pfm")
    norm, dmin, dmax = normalized_depth(result.depth)
    save_png(np.repeat(norm[..., None], 3, axis=2), out / f"room_depth{i}.png")
    print(f"view {i}: coverage {result.alpha.mean():.2f}, "
          f"depth range [{dmin:.2f}, {dmax:.2f}]")

slow = render(room, cams[0], background=(0.05, 0.05, 0.08))
fast = render_fast(room, cams[0], background=(0.05, 0.05, 0.08))
print("plain vs tiled max deviation:", np.abs(slow.color - fast.color).max())
print(f"previews and PFM dumps under {out}")
