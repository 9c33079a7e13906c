"""Editing-region geometry: the oriented box, its orbit, and its masks.

Places a box in the room, builds the two 120-degree editing arcs
around it, and projects the box into per-view binary masks.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from _room import make_room  # noqa: E402

from splatedit.cameras import (OrientedBBox, TrajectorySpec, central_camera,
                               make_trajectory, point_in_bbox, project_bbox_mask,
                               save_bbox_json)
from splatedit.images import save_mask_png

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

bbox = OrientedBBox(center=np.array([0.3, -0.2, 0.95]),
                    half_extents=np.array([0.5, 0.5, 0.5]),
                    rotation=np.array([0.966, 0.0, 0.0, 0.259]))  # ~30 degree yaw
save_bbox_json(bbox, out / "bbox.json")
print("box corners:\n", np.round(bbox.corners(), 2))
print("center inside itself:", point_in_bbox(bbox, bbox.center))

cams = []
for side in ("left", "right"):
    arc = make_trajectory(bbox, TrajectorySpec(
        n_views=14, arc_degrees=120.0, radius=2.2, elevation_degrees=15.0,
        side=side, fx=128.0, fy=128.0, width=128, height=128))
    cams.extend(arc)
    conditioning = central_camera(arc)
    print(f"{side} arc: {len(arc)} cameras, conditioning view at index "
          f"{arc.index(conditioning)}")

room = make_room()
for i in (0, 13, 14, 27):
    mask = project_bbox_mask(bbox, cams[i])
    save_mask_png(mask, out / f"mask_view{i:02d}.png")
    print(f"view {i:2d}: mask covers {mask.mean() * 100:.1f}% of the frame")
