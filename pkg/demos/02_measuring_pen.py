"""Define a box by touching four corners with a tracked pen tip.

Tap order: top of one vertical edge, its bottom, along the bottom front
edge, then the far corner across the bottom face. The second and third
taps fix the box's x axis, the first tap fixes height, the last one
fixes depth. Real taps are noisy and rarely perpendicular; the
construction still returns a proper rotation.
"""

import numpy as np

from boxlabel import CameraModel, RigidTransform, build_virtual_box, box_vertices

rng = np.random.default_rng(3)

# ground truth: a 0.30 x 0.22 x 0.12 m box sitting slightly rotated on a table
p0 = np.array([0.10, 0.05, 0.12])
p1 = np.array([0.10, 0.05, 0.00])
p2 = p1 + 0.30 * np.array([0.940, 0.342, 0.0])
p3 = p2 + 0.22 * np.array([-0.342, 0.940, 0.0])

taps = [p + rng.normal(scale=0.002, size=3) for p in (p0, p1, p2, p3)]  # 2mm jitter
box = build_virtual_box(*taps, class_id=0, class_name="parcel", instance_id=7)

print("pen taps (m):")
for t in taps:
    print(f"  ({t[0]:+.3f}, {t[1]:+.3f}, {t[2]:+.3f})")
print(f"\nrecovered size: {np.round(box.size, 3)} m (true 0.30 0.22 0.12)")
print(f"origin corner:  {np.round(box.world_T_obj.translation, 3)}")
r = box.world_T_obj.rotation
print(f"det(R) = {np.linalg.det(r):.6f}, |R^T R - I| = {np.abs(r.T @ r - np.eye(3)).max():.2e}")

# sanity view: put a camera overhead and reproject the wireframe
cam = CameraModel(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)
eye = np.array([0.25, 0.20, 1.40])
z = np.array([0.0, 0.0, -1.0])
x = np.array([1.0, 0.0, 0.0])
pose = RigidTransform(np.column_stack([x, np.cross(z, x), z]), eye)

verts = box_vertices(box)
in_cam = pose.invert().transform_points(verts)
uv = cam.project_points(in_cam)
print("\ncorner pixels seen from overhead:")
for k, (u, v) in enumerate(uv):
    print(f"  v{k}: ({u:6.1f}, {v:6.1f})")
