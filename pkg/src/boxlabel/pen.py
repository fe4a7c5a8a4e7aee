"""Tracked-pen tip estimation and four-point box construction.

The labeling pen carries several fiducial markers, each with a known rigid
offset from the pen tip. An external detector reports per-frame marker poses
in the camera frame; combining each observation with its tip offset gives an
independent estimate of the tip pose, and averaging them damps single-marker
detection error. Boxes are then drawn by touching four points with the tip:
a top corner, the corner straight below it, then two base corners walking
around the footprint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CollinearPoints,
    DegenerateEdge,
    DuplicateId,
    InconsistentObservations,
    NoMarkersVisible,
    ParseError,
)
from .geometry import RigidTransform, quaternion_from_rotation, rotation_from_quaternion
from .jsonio import load_json
from .scene import VirtualBox, _pose_from_value

# defaults sized to hand-tremor scale
MAX_POSITION_SPREAD = 0.02  # meters
MIN_EDGE_LENGTH = 1e-3  # meters
MIN_EDGE_ANGLE_DEG = 1.0


@dataclass(frozen=True)
class MarkerObservation:
    """One detected pen marker: its camera-frame pose plus its tip offset."""

    marker_id: int
    cam_T_marker: RigidTransform
    tip_T_marker: RigidTransform


@dataclass(frozen=True)
class TipEstimate:
    """Averaged camera-frame tip pose with a consistency measure.

    position_spread is the max pairwise distance between the per-marker tip
    positions; large values flag a marker misdetection.
    """

    cam_T_tip: RigidTransform
    position_spread: float
    marker_count: int


def estimate_tip(observations, max_spread: float = MAX_POSITION_SPREAD) -> TipEstimate:
    """Fuse simultaneous marker observations into one tip pose.

    Each marker gives cam_T_tip = cam_T_marker o inverse(tip_T_marker);
    positions are averaged arithmetically, rotations via hemisphere-aligned
    quaternion component mean (adequate for the small angular spreads of a
    rigid pen).
    """
    obs = list(observations)
    if not obs:
        raise NoMarkersVisible("cannot estimate tip pose: no marker observations")
    poses = [o.cam_T_marker.compose(o.tip_T_marker.invert()) for o in obs]
    positions = np.array([p.translation for p in poses])

    spread = 0.0
    for i in range(len(poses)):
        for j in range(i + 1, len(poses)):
            spread = max(spread, float(np.linalg.norm(positions[i] - positions[j])))
    if spread > max_spread:
        raise InconsistentObservations(
            f"per-marker tip positions disagree by {spread:.4f} m "
            f"(threshold {max_spread:.4f} m); likely a marker misdetection"
        )

    quats = np.array([quaternion_from_rotation(p.rotation) for p in poses])
    for i in range(1, len(quats)):
        if float(np.dot(quats[i], quats[0])) < 0.0:
            quats[i] = -quats[i]
    q_mean = quats.mean(axis=0)
    rotation = rotation_from_quaternion(q_mean)

    return TipEstimate(
        cam_T_tip=RigidTransform(rotation, positions.mean(axis=0)),
        position_spread=spread,
        marker_count=len(obs),
    )


def build_virtual_box(
    p0,
    p1,
    p2,
    p3,
    class_id: int,
    instance_id: int = 0,
    class_name: str = "",
    min_edge: float = MIN_EDGE_LENGTH,
    min_angle_deg: float = MIN_EDGE_ANGLE_DEG,
) -> VirtualBox:
    """Construct a box from four tip points, pose expressed in the camera frame.

    p0 is a top corner and becomes the box origin; p0->p1 is the vertical
    edge (local -z through the body, so v_z points up out of it), p1->p2 the
    first base edge (local x) and p2->p3 the second (local y). Hand-drawn
    points are never exactly perpendicular, so the vertical edge is trusted
    and the frame is squared up around it: v_y = normalize(v_z x v_x_raw),
    v_x = v_y x v_z.
    """
    p0, p1, p2, p3 = (np.asarray(p, dtype=np.float64).reshape(3) for p in (p0, p1, p2, p3))
    edges = {"p0->p1": p1 - p0, "p1->p2": p2 - p1, "p2->p3": p3 - p2}
    lengths = {}
    for name, e in edges.items():
        n = float(np.linalg.norm(e))
        if n <= min_edge:
            raise DegenerateEdge(f"edge {name} is {n * 1e3:.3f} mm, below the minimum")
        lengths[name] = n

    v_z = edges["p0->p1"] / lengths["p0->p1"]
    v_x_raw = edges["p1->p2"] / lengths["p1->p2"]
    cross = np.cross(v_z, v_x_raw)
    if float(np.linalg.norm(cross)) <= math.sin(math.radians(min_angle_deg)):
        raise CollinearPoints("the vertical edge and the first base edge are nearly parallel")
    v_y = cross / np.linalg.norm(cross)
    v_x = np.cross(v_y, v_z)

    return VirtualBox(
        id=instance_id,
        world_T_obj=RigidTransform(np.column_stack([v_x, v_y, v_z]), p0),
        size=(lengths["p1->p2"], lengths["p2->p3"], lengths["p0->p1"]),
        class_id=class_id,
        class_name=class_name,
    )


def box_to_world(box_in_cam: VirtualBox, world_T_cam: RigidTransform) -> VirtualBox:
    """Re-express a camera-frame box in the world frame."""
    return VirtualBox(
        id=box_in_cam.id,
        world_T_obj=world_T_cam.compose(box_in_cam.world_T_obj),
        size=box_in_cam.size,
        class_id=box_in_cam.class_id,
        class_name=box_in_cam.class_name,
    )


def load_pen_layout(path) -> dict[int, RigidTransform]:
    """Read a pen layout file: marker_id -> tip_T_marker.

    Format: {"markers": [{"marker_id": int, "tip_T_marker": [16 numbers]}]}
    """
    try:
        doc = load_json(path)
    except ValueError as e:
        raise ParseError(f"{path}: not valid JSON ({e})")
    except OSError as e:
        raise ParseError(f"{path}: cannot read layout ({e})")
    if not isinstance(doc, dict) or "markers" not in doc:
        raise ParseError(f"{path}: layout must be an object with a markers list")
    markers = doc["markers"]
    if not isinstance(markers, list):
        raise ParseError(f"{path}: markers must be a list")
    layout = {}
    for i, md in enumerate(markers):
        where = f"markers[{i}]"
        if not isinstance(md, dict) or "marker_id" not in md or "tip_T_marker" not in md:
            raise ParseError(f"{where}: need marker_id and tip_T_marker")
        mid = md["marker_id"]
        if not isinstance(mid, int) or isinstance(mid, bool):
            raise ParseError(f"{where}: marker_id must be an integer")
        if mid in layout:
            raise DuplicateId(f"{where}: duplicate marker id {mid}")
        layout[mid] = _pose_from_value(md["tip_T_marker"], where)
    return layout


def read_observation_stream(path, layout: dict[int, RigidTransform]):
    """Iterate a marker-detection stream (JSON lines, one object per frame).

    Each line: {"frame_id": int, "detections": [{"marker_id", "cam_T_marker"}]}.
    Yields (frame_id, observations) pairs; detections of markers not in the
    pen layout are ignored (the detector may see other markers in the scene).
    """
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{Path(path).name}:{lineno}"
            try:
                rec = json.loads(line)
            except ValueError as e:
                raise ParseError(f"{where}: bad JSON ({e})")
            if not isinstance(rec, dict) or "frame_id" not in rec or "detections" not in rec:
                raise ParseError(f"{where}: need frame_id and detections")
            fid = rec["frame_id"]
            if not isinstance(fid, int) or isinstance(fid, bool):
                raise ParseError(f"{where}: frame_id must be an integer")
            dets = rec["detections"]
            if not isinstance(dets, list):
                raise ParseError(f"{where}: detections must be a list")
            obs = []
            for d in dets:
                if not isinstance(d, dict) or "marker_id" not in d or "cam_T_marker" not in d:
                    raise ParseError(f"{where}: each detection needs marker_id and cam_T_marker")
                mid = d["marker_id"]
                if mid not in layout:
                    continue
                obs.append(
                    MarkerObservation(
                        marker_id=mid,
                        cam_T_marker=_pose_from_value(d["cam_T_marker"], where),
                        tip_T_marker=layout[mid],
                    )
                )
            yield fid, obs
