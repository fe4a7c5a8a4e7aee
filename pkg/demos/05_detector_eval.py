"""Score detector output against generated labels.

Ground truth comes straight from the geometric labeler; the "detector"
here is a simulation that jitters boxes, misses some, and hallucinates
a few extras. Matching is greedy by confidence at IOU > 0.3, AP uses
the all-point interpolation.
"""

import math

import numpy as np

from boxlabel import (
    Annotation2D,
    CameraModel,
    Frame,
    FrameSet,
    InstanceSet,
    RigidTransform,
    VirtualBox,
    average_precision,
    evaluate_detections,
    label_all,
)

CAM = CameraModel(fx=600.0, fy=600.0, cx=320.0, cy=240.0, width=640, height=480)
rng = np.random.default_rng(12)


def look_at(eye):
    eye = np.asarray(eye, dtype=np.float64)
    z = -eye / np.linalg.norm(eye)
    x = np.cross([0.0, 0.0, 1.0], z)
    x = x / np.linalg.norm(x)
    return RigidTransform(np.column_stack([x, np.cross(z, x), z]), eye)


boxes = [
    VirtualBox(id=0, world_T_obj=RigidTransform(np.eye(3), [-0.5, 0, 0]),
               size=np.array([0.5, 0.4, 0.4]), class_id=0),
    VirtualBox(id=1, world_T_obj=RigidTransform(np.eye(3), [0.5, 0.2, 0]),
               size=np.array([0.3, 0.3, 0.6]), class_id=1),
]
instances = InstanceSet(class_table={0: "crate", 1: "drum"}, instances=boxes)
frames = [
    Frame(id=i, image_path=f"{i}.png",
          world_T_cam=look_at([3.5 * math.cos(2 * math.pi * i / 60),
                               3.5 * math.sin(2 * math.pi * i / 60), 1.5]),
          camera=CAM)
    for i in range(60)
]
truth = label_all(FrameSet(camera=CAM, frames=frames), instances)

# evaluate_detections wants frame_id -> annotation list on both sides
gts = {lf.frame_id: list(lf.annotations) for lf in truth}
preds = {}
for lf in truth:
    dets = []
    for a in lf.annotations:
        if rng.random() < 0.12:
            continue  # miss
        dets.append(Annotation2D(
            class_id=a.class_id,
            cx=a.cx + rng.normal(scale=0.06 * a.w),
            cy=a.cy + rng.normal(scale=0.06 * a.h),
            w=a.w * rng.uniform(0.85, 1.15),
            h=a.h * rng.uniform(0.85, 1.15),
            instance_id=-1,
            confidence=float(rng.uniform(0.5, 1.0)),
        ))
    if rng.random() < 0.15:  # hallucination, low confidence
        dets.append(Annotation2D(0, rng.uniform(50, 590), rng.uniform(50, 430),
                                 40.0, 30.0, -1, confidence=float(rng.uniform(0.05, 0.4))))
    preds[lf.frame_id] = dets

report = evaluate_detections(preds, gts, iou_th=0.3)
print(f"mAP@0.3       {report.mean_ap:.4f}")
print(f"overall       P {report.overall.precision:.3f}  R {report.overall.recall:.3f}"
      f"  avg IOU {report.overall.avg_iou:.3f}")
for cid, cls in sorted(report.per_class.items()):
    name = instances.class_table[cid]
    print(f"class {name:6s} AP {average_precision(cls.curve):.4f}"
          f"  ({cls.n_gt} gt, tp {cls.stats.tp}, fp {cls.stats.fp}, fn {cls.stats.fn})")

curve = report.per_class[0].curve
print("\nPR samples for 'crate' (threshold, precision, recall):")
for c, p, r in curve.points[:: max(1, len(curve.points) // 6)]:
    print(f"  {c:.3f}  {p:.3f}  {r:.3f}")
