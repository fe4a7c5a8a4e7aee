"""Label a synthetic camera orbit and write a YOLO dataset.

The scene is two boxes near the origin and a camera circling them at
radius 4. Every frame gets its 2D boxes purely from geometry: no
detector, no image content.
"""

import math
import tempfile
from pathlib import Path

import numpy as np

from boxlabel import (
    CameraModel,
    Frame,
    FrameSet,
    InstanceSet,
    RigidTransform,
    VirtualBox,
    generate_dataset,
    label_all,
)

CAM = CameraModel(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)


def look_at(eye):
    # camera z axis points at the origin, x/y picked to be orthonormal
    eye = np.asarray(eye, dtype=np.float64)
    z = -eye / np.linalg.norm(eye)
    x = np.cross([0.0, 0.0, 1.0], z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return RigidTransform(np.column_stack([x, y, z]), eye)


crate = VirtualBox(
    id=0,
    world_T_obj=RigidTransform(np.eye(3), [-0.6, -0.3, 0.0]),
    size=np.array([0.6, 0.4, 0.5]),
    class_id=0,
)
pallet = VirtualBox(
    id=1,
    world_T_obj=RigidTransform.identity().compose(
        RigidTransform(np.eye(3), [0.4, 0.2, -0.1])
    ),
    size=np.array([0.8, 0.8, 0.15]),
    class_id=1,
)
instances = InstanceSet(
    class_table={0: "crate", 1: "pallet"}, instances=[crate, pallet]
)

frames = []
for i in range(36):
    ang = 2 * math.pi * i / 36
    eye = [4 * math.cos(ang), 4 * math.sin(ang), 1.8]
    frames.append(
        Frame(id=i, image_path=f"img/{i:04d}.png", world_T_cam=look_at(eye), camera=CAM)
    )
scene = FrameSet(camera=CAM, frames=frames)

labeled = label_all(scene, instances)
print(f"labeled {len(labeled)} frames")
for lf in labeled[:3]:
    for a in lf.annotations:
        print(
            f"  frame {lf.frame_id}: {instances.class_table[a.class_id]:6s}"
            f" center ({a.cx:6.1f},{a.cy:6.1f}) size ({a.w:5.1f}x{a.h:5.1f}) px"
        )

out = Path(tempfile.mkdtemp()) / "orbit_dataset"
stats = generate_dataset(scene, instances, out_dir=out, format="yolo")
print(f"\nwrote {out}")
print(f"frames {stats.frames_written}, annotations {stats.annotations_written}")
first = sorted((out / "labels").iterdir())[0]
print(f"\n{first.name}:")
print(first.read_text().rstrip())
