"""Carve a box proposal out of two hand-drawn silhouettes.

An operator outlines the object in two roughly orthogonal views. The
silhouette frustums are intersected on a voxel grid; the surviving
voxels' bounding box becomes a starting instance that a human can then
refine (which beats entering nine pose numbers from scratch).
"""

import numpy as np

from boxlabel import (
    CameraModel,
    Frame,
    FrameSet,
    RigidTransform,
    SilhouetteMask,
    carve,
    hull_to_instance,
)

TELE = CameraModel(fx=2400.0, fy=2400.0, cx=320.0, cy=240.0, width=640, height=480)


def look_at(eye):
    eye = np.asarray(eye, dtype=np.float64)
    z = -eye / np.linalg.norm(eye)
    ref = np.array([0.0, 0.0, 1.0]) if abs(z[2]) < 0.99 else np.array([1.0, 0.0, 0.0])
    x = np.cross(ref, z)
    x = x / np.linalg.norm(x)
    return RigidTransform(np.column_stack([x, np.cross(z, x), z]), eye)


def face_outline(frame, half=0.5):
    """Project the cube face nearest the camera; that square IS the
    silhouette for a head-on view of an axis-aligned cube."""
    eye = frame.world_T_cam.translation
    axis = int(np.argmax(np.abs(eye)))
    sign = 1.0 if eye[axis] > 0 else -1.0
    corners = []
    for a in (-half, half):
        for b in (-half, half):
            p = np.zeros(3)
            p[axis] = sign * half
            p[(axis + 1) % 3] = a
            p[(axis + 2) % 3] = b
            corners.append(p)
    corners = [corners[0], corners[1], corners[3], corners[2]]  # ring order
    in_cam = frame.world_T_cam.invert().transform_points(np.array(corners))
    return frame.camera.project_points(in_cam)


# unit cube at the origin, seen from the front and from the side
frames = [
    Frame(id=0, image_path="front.png", world_T_cam=look_at([0, 0, 40]), camera=TELE),
    Frame(id=1, image_path="side.png", world_T_cam=look_at([40, 0, 0]), camera=TELE),
]
scene = FrameSet(camera=TELE, frames=frames)
masks = [SilhouetteMask(f.id, face_outline(f)) for f in frames]

hull = carve(masks, scene, volume=([-1, -1, -1], [1, 1, 1]), resolution=0.05)
print(f"occupied voxels: {hull.voxel_count()} of {hull.occupancy.size}")
print(f"hull centroid:   {np.round(hull.centroid(), 3)}")

box = hull_to_instance(hull, class_id=0, class_name="cube")
print(f"proposed size:   {np.round(box.size, 3)} (true 1.0 1.0 1.0)")
print(f"proposed origin: {np.round(box.world_T_obj.translation, 3)}")

# a third view can only remove voxels, never add them
masks.append(SilhouetteMask(1, face_outline(frames[1], half=0.4)))
tighter = carve(masks, scene, volume=([-1, -1, -1], [1, 1, 1]), resolution=0.05)
print(f"\nwith a tighter third outline: {tighter.voxel_count()} voxels "
      f"({hull.voxel_count() - tighter.voxel_count()} carved away)")
