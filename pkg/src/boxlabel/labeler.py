"""Auto-labeling engine: reproject every box into every frame.

For each (frame, box) pair the 8 box corners go to the camera frame, the 12
box edges are clipped against the near plane, the surviving points are
projected, and their axis-aligned bounding rectangle (clipped to the image)
becomes the 2D annotation. Occlusion between objects is deliberately not
modeled: a box hidden behind another is still labeled.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError, UnknownFormat
from .geometry import CameraModel, PixelPoint, RigidTransform
from .jsonio import dump_json, load_json
from .scene import BOX_EDGES, Frame, FrameSet, InstanceSet, VirtualBox, box_local_vertices


@dataclass(frozen=True)
class LabelerConfig:
    """Visibility thresholds for the reprojection pipeline.

    near_plane: camera-frame z below which geometry is cut away (meters).
    min_box_area: smallest clipped box area kept, in pixels squared.
    min_visible_fraction: smallest kept ratio of clipped to unclipped
    projected box area; drops boxes that are almost entirely out of frame.
    """

    near_plane: float = 0.01
    min_box_area: float = 25.0
    min_visible_fraction: float = 0.05

    def __post_init__(self):
        if not self.near_plane > 0:
            raise ValueError("near_plane must be positive")
        if self.min_box_area < 0:
            raise ValueError("min_box_area must be non-negative")
        if not 0.0 <= self.min_visible_fraction <= 1.0:
            raise ValueError("min_visible_fraction must be in [0, 1]")


DEFAULT_CONFIG = LabelerConfig()


@dataclass(frozen=True)
class Annotation2D:
    """One 2D box: center, size (pixels), class and source instance."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float
    instance_id: int
    confidence: float | None = None

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"annotation size must be positive, got w={self.w} h={self.h}")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")

    def corners(self) -> tuple[float, float, float, float]:
        """(u0, v0, u1, v1) corner form."""
        return (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )


@dataclass(frozen=True)
class LabeledFrame:
    frame_id: int
    annotations: list[Annotation2D] = field(default_factory=list)


def reproject_box(frame: Frame, box: VirtualBox, cfg: LabelerConfig = DEFAULT_CONFIG):
    """Project a box's corners into a frame, clipping edges at the near plane.

    Returns PixelPoints: first the corners with z >= near_plane in corner
    order, then one point per edge that strictly crosses the plane, in
    BOX_EDGES order. Empty when the whole box is behind the near plane.
    """
    cam_T_obj = frame.world_T_cam.invert().compose(box.world_T_obj)
    pts = cam_T_obj.transform_points(box_local_vertices(box.size))
    near = cfg.near_plane
    z = pts[:, 2]

    visible = []
    for k in range(8):
        if z[k] >= near:
            visible.append((float(pts[k, 0]), float(pts[k, 1]), float(z[k])))
    for a, b in BOX_EDGES:
        za, zb = float(z[a]), float(z[b])
        if (za < near < zb) or (zb < near < za):
            t = (near - za) / (zb - za)
            visible.append(
                (
                    float(pts[a, 0]) + t * (float(pts[b, 0]) - float(pts[a, 0])),
                    float(pts[a, 1]) + t * (float(pts[b, 1]) - float(pts[a, 1])),
                    near,
                )
            )

    cam = frame.camera
    return [PixelPoint(cam.fx * x / d + cam.cx, cam.fy * y / d + cam.cy) for x, y, d in visible]


def min_bbox(points, camera: CameraModel, cfg: LabelerConfig = DEFAULT_CONFIG):
    """Axis-aligned bounding rectangle of the points, clipped to the image.

    Returns (cx, cy, w, h) or None when nothing visible enough remains:
    empty input, box fully outside the image, clipped area below
    min_box_area, or visible fraction below min_visible_fraction.
    """
    if not points:
        return None
    us = [p[0] for p in points]
    vs = [p[1] for p in points]
    u0, u1 = min(us), max(us)
    v0, v1 = min(vs), max(vs)
    raw_area = (u1 - u0) * (v1 - v0)

    cu0, cu1 = max(u0, 0.0), min(u1, float(camera.width))
    cv0, cv1 = max(v0, 0.0), min(v1, float(camera.height))
    if cu1 <= cu0 or cv1 <= cv0:
        return None
    area = (cu1 - cu0) * (cv1 - cv0)
    if area < cfg.min_box_area:
        return None
    if raw_area <= 0.0 or area / raw_area < cfg.min_visible_fraction:
        return None
    return ((cu0 + cu1) / 2.0, (cv0 + cv1) / 2.0, cu1 - cu0, cv1 - cv0)


def label_frame(
    frame: Frame,
    instances: InstanceSet,
    cfg: LabelerConfig = DEFAULT_CONFIG,
    reduce=min_bbox,
) -> LabeledFrame:
    """Annotate one frame with every visible instance, ordered by instance id.

    ``reduce`` maps (projected points, camera, cfg) to box geometry or None;
    the axis-aligned bounding rectangle is the default and only built-in.
    """
    annotations = []
    for box in sorted(instances, key=lambda b: b.id):
        pts = reproject_box(frame, box, cfg)
        geom = reduce(pts, frame.camera, cfg)
        if geom is None:
            continue
        cx, cy, w, h = geom
        annotations.append(
            Annotation2D(class_id=box.class_id, cx=cx, cy=cy, w=w, h=h, instance_id=box.id)
        )
    return LabeledFrame(frame_id=frame.id, annotations=annotations)


@dataclass
class DatasetStats:
    frames_written: int = 0
    annotations_written: int = 0
    per_class: dict[int, int] = field(default_factory=dict)
    elapsed_seconds: float = 0.0


def _label_chunk(args):
    frames, instances, cfg, reduce = args
    return [label_frame(f, instances, cfg, reduce) for f in frames]


def label_all(
    frames: FrameSet,
    instances: InstanceSet,
    cfg: LabelerConfig = DEFAULT_CONFIG,
    jobs: int = 1,
    reduce=min_bbox,
) -> list[LabeledFrame]:
    """Label every frame; with jobs > 1, fan frames out across processes.

    The result is identical to the sequential run regardless of jobs: frames
    are split into contiguous chunks and reassembled in order.
    """
    frame_list = list(frames)
    if jobs <= 1 or len(frame_list) < 2 * jobs:
        return [label_frame(f, instances, cfg, reduce) for f in frame_list]
    chunks = [frame_list[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(pool.map(_label_chunk, [(c, instances, cfg, reduce) for c in chunks]))
    # stitch the strided chunks back into frame order
    out: list[LabeledFrame] = [None] * len(frame_list)  # type: ignore[list-item]
    for i, chunk_result in enumerate(results):
        out[i :: jobs] = chunk_result
    return out


def split_frame_ids(frame_ids, seed: int, train_fraction: float = 0.8):
    """Deterministic train/val split by seeded shuffle; returns sorted lists."""
    ids = list(frame_ids)
    order = np.random.default_rng(seed).permutation(len(ids))
    n_train = int(round(train_fraction * len(ids)))
    train = sorted(ids[i] for i in order[:n_train])
    val = sorted(ids[i] for i in order[n_train:])
    return train, val


def _write_yolo(out_dir: Path, frames: FrameSet, labeled, class_table):
    labels_dir = out_dir / "labels"
    labels_dir.mkdir(parents=True, exist_ok=True)
    for lf in labeled:
        frame = frames.get(lf.frame_id)
        w, h = float(frame.camera.width), float(frame.camera.height)
        lines = []
        for a in lf.annotations:
            lines.append(
                f"{a.class_id} {a.cx / w:.6f} {a.cy / h:.6f} {a.w / w:.6f} {a.h / h:.6f}"
            )
        (labels_dir / f"{lf.frame_id:06d}.txt").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )
    names = [class_table[k] for k in sorted(class_table)]
    (out_dir / "classes.txt").write_text("".join(n + "\n" for n in names), encoding="utf-8")


def _write_json(out_dir: Path, labeled):
    doc = {}
    for lf in labeled:
        doc[str(lf.frame_id)] = [
            {
                "class_id": a.class_id,
                "instance_id": a.instance_id,
                "cx": a.cx,
                "cy": a.cy,
                "w": a.w,
                "h": a.h,
            }
            for a in lf.annotations
        ]
    dump_json(doc, out_dir / "annotations.json")


def annotations_from_dict(doc: dict) -> list[LabeledFrame]:
    """Inverse of the json dataset format: frame id keys, box-dict lists."""
    if not isinstance(doc, dict):
        raise ParseError("annotations document must be an object")
    out = []
    for key, anns in doc.items():
        try:
            fid = int(key)
        except ValueError as e:
            raise ParseError(f"bad frame id {key!r}") from e
        boxes = []
        for a in anns:
            try:
                boxes.append(
                    Annotation2D(
                        class_id=int(a["class_id"]),
                        cx=float(a["cx"]),
                        cy=float(a["cy"]),
                        w=float(a["w"]),
                        h=float(a["h"]),
                        instance_id=int(a.get("instance_id", -1)),
                    )
                )
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"bad annotation in frame {fid}: {e}") from e
        out.append(LabeledFrame(frame_id=fid, annotations=boxes))
    out.sort(key=lambda lf: lf.frame_id)
    return out


def load_annotations(path) -> list[LabeledFrame]:
    return annotations_from_dict(load_json(path))


def generate_dataset(
    frames: FrameSet,
    instances: InstanceSet,
    cfg: LabelerConfig = DEFAULT_CONFIG,
    out_dir="dataset",
    format: str = "yolo",
    split_seed: int | None = None,
    train_fraction: float = 0.8,
    jobs: int = 1,
    reduce=min_bbox,
) -> DatasetStats:
    """Label all frames and write them to disk in the chosen format.

    Formats: "yolo" (one labels/<frame id>.txt per frame, normalized
    coordinates, plus classes.txt) or "json" (single annotations.json in
    pixels). With split_seed set, a seeded 80/20 train/val split manifest is
    written to split.json.
    """
    if format not in ("yolo", "json"):
        raise UnknownFormat(f"unknown dataset format {format!r} (expected yolo or json)")
    t0 = time.perf_counter()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    labeled = label_all(frames, instances, cfg, jobs=jobs, reduce=reduce)
    if format == "yolo":
        _write_yolo(out, frames, labeled, instances.class_table)
    else:
        _write_json(out, labeled)

    if split_seed is not None:
        train, val = split_frame_ids(frames.ids(), split_seed, train_fraction)
        dump_json({"seed": split_seed, "train": train, "val": val}, out / "split.json")

    stats = DatasetStats(frames_written=len(labeled))
    for lf in labeled:
        for a in lf.annotations:
            stats.annotations_written += 1
            stats.per_class[a.class_id] = stats.per_class.get(a.class_id, 0) + 1
    stats.elapsed_seconds = time.perf_counter() - t0
    return stats
