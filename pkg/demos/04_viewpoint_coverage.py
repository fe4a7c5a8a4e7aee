"""Where has the camera actually been, relative to one object?

Each frame's camera position is expressed in the object frame and
dropped into an azimuth x elevation histogram. Bins that stay empty
are viewing directions nobody captured: a re-recording checklist.

Here the operator walks a 3/4 circle at two heights and never visits
the back-left quadrant.
"""

import math

import numpy as np

from boxlabel import (
    CameraModel,
    Frame,
    FrameSet,
    InstanceSet,
    RigidTransform,
    VirtualBox,
    coverage_gaps,
    coverage_histogram,
)

CAM = CameraModel(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)

target = VirtualBox(
    id=0,
    world_T_obj=RigidTransform(np.eye(3), [0.0, 0.0, 0.4]),
    size=np.array([0.5, 0.5, 0.8]),
    class_id=0,
)
instances = InstanceSet(class_table={0: "pump"}, instances=[target])

frames = []
fid = 0
for height in (0.6, 1.6):
    for k in range(120):
        ang = -math.pi + 1.5 * math.pi * k / 120  # stops 90 degrees short
        eye = [3 * math.cos(ang), 3 * math.sin(ang), height]
        frames.append(
            Frame(id=fid, image_path=f"{fid}.png",
                  world_T_cam=RigidTransform(np.eye(3), eye), camera=CAM)
        )
        fid += 1
scene = FrameSet(camera=CAM, frames=frames)

hist = coverage_histogram(scene, target, theta_bins=12, phi_bins=6)
print(f"{hist.total} frames into {hist.theta_bins}x{hist.phi_bins} bins")
print("\nelevation rows (top = looking down), azimuth columns:")
for row in hist.counts:
    print("  " + " ".join(f"{c:3d}" for c in row))

gaps = coverage_gaps(hist, min_count=1)
print(f"\n{len(gaps)} empty bins overall")

# most elevation rows were never reachable on foot; the actionable gaps
# are the empty azimuths inside the band the operator did walk
walked = {p for p in range(hist.phi_bins) if hist.counts[p].any()}
missing = sorted({t for t, p, c in gaps if p in walked})
w = 360.0 / hist.theta_bins
print("unvisited azimuths at walking height: "
      + ", ".join(f"{-180 + (t + 0.5) * w:.0f} deg" for t in missing))
