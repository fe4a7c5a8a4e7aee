"""Scene model: camera frames, virtual box instances, and their file formats.

A project is two JSON files. The frame manifest lists every image with its
camera pose (``world_T_cam``, camera-to-world) and intrinsics; the instance
file lists labeled boxes, each with a pose (``world_T_obj``) and a size.

A box with size (sx, sy, sz) occupies the object-frame region
[0, sx] x [0, sy] x [-sz, 0]: its origin is a corner, not its center, and
the box body extends along +x, +y and -z. This matches how boxes are drawn
with the tracked pen: the first stroke goes from a top corner (the origin)
straight down, then along two base edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DuplicateId, InvalidPose, InvalidSize, NotFound, ParseError
from .geometry import CameraModel, RigidTransform
from .jsonio import dump_json, load_json


def _require(d, key, where):
    if not isinstance(d, dict):
        raise ParseError(f"{where}: expected an object, got {type(d).__name__}")
    if key not in d:
        raise ParseError(f"{where}: missing required key {key!r}")
    return d[key]


def _int_id(v, where):
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise ParseError(f"{where}: id must be a non-negative integer, got {v!r}")
    return v


def _pose_from_value(v, where) -> RigidTransform:
    try:
        flat = np.asarray(v, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ParseError(f"{where}: pose must be 16 numbers ({e})")
    if flat.shape != (16,):
        raise ParseError(f"{where}: pose must be 16 row-major numbers, got shape {flat.shape}")
    try:
        return RigidTransform.from_flat(flat)
    except InvalidPose as e:
        raise InvalidPose(f"{where}: {e}")


def camera_from_dict(d, where="camera") -> CameraModel:
    vals = {}
    for key in ("fx", "fy", "cx", "cy"):
        v = _require(d, key, where)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ParseError(f"{where}: {key} must be a number")
        vals[key] = float(v)
    for key in ("width", "height"):
        v = _require(d, key, where)
        if not isinstance(v, int) or isinstance(v, bool):
            raise ParseError(f"{where}: {key} must be an integer pixel count")
        vals[key] = v
    try:
        return CameraModel(**vals)
    except ValueError as e:
        raise ParseError(f"{where}: {e}")


def camera_to_dict(cam: CameraModel) -> dict:
    return {
        "fx": cam.fx,
        "fy": cam.fy,
        "cx": cam.cx,
        "cy": cam.cy,
        "width": cam.width,
        "height": cam.height,
    }


@dataclass(frozen=True)
class Frame:
    """One image: its id, file path (relative to the manifest), pose, camera."""

    id: int
    image_path: str
    world_T_cam: RigidTransform
    camera: CameraModel


@dataclass
class FrameSet:
    """An ordered collection of frames sharing a default camera.

    base_dir anchors the frames' relative image paths; it is the manifest's
    directory when loaded from disk.
    """

    camera: CameraModel
    frames: list[Frame] = field(default_factory=list)
    base_dir: Path = Path(".")

    def __post_init__(self):
        self.base_dir = Path(self.base_dir)
        self._by_id = {}
        for f in self.frames:
            if f.id in self._by_id:
                raise DuplicateId(f"duplicate frame id {f.id}")
            self._by_id[f.id] = f

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def get(self, frame_id: int) -> Frame:
        try:
            return self._by_id[frame_id]
        except KeyError:
            raise NotFound(f"no frame with id {frame_id}")

    def image_file(self, frame_id: int) -> Path:
        return self.base_dir / self.get(frame_id).image_path

    def ids(self) -> list[int]:
        return [f.id for f in self.frames]


def frames_from_dict(doc, base_dir=".") -> FrameSet:
    default_cam = camera_from_dict(_require(doc, "camera", "manifest"))
    raw = _require(doc, "frames", "manifest")
    if not isinstance(raw, list):
        raise ParseError("manifest: frames must be a list")
    frames = []
    for i, fd in enumerate(raw):
        where = f"frames[{i}]"
        fid = _int_id(_require(fd, "id", where), where)
        image = _require(fd, "image", where)
        if not isinstance(image, str):
            raise ParseError(f"{where}: image must be a path string")
        pose = _pose_from_value(_require(fd, "world_T_cam", where), where)
        cam = camera_from_dict(fd["camera"], f"{where}.camera") if "camera" in fd else default_cam
        frames.append(Frame(id=fid, image_path=image, world_T_cam=pose, camera=cam))
    return FrameSet(camera=default_cam, frames=frames, base_dir=base_dir)


def frames_to_dict(fs: FrameSet) -> dict:
    out_frames = []
    for f in fs.frames:
        fd = {"id": f.id, "image": f.image_path, "world_T_cam": f.world_T_cam.as_flat()}
        if f.camera != fs.camera:
            fd["camera"] = camera_to_dict(f.camera)
        out_frames.append(fd)
    return {"camera": camera_to_dict(fs.camera), "frames": out_frames}


def load_frames(path) -> FrameSet:
    try:
        doc = load_json(path)
    except ValueError as e:
        raise ParseError(f"{path}: not valid JSON ({e})")
    except OSError as e:
        raise ParseError(f"{path}: cannot read manifest ({e})")
    return frames_from_dict(doc, base_dir=Path(path).parent)


def save_frames(fs: FrameSet, path) -> None:
    dump_json(frames_to_dict(fs), path)


def _check_size(size) -> np.ndarray:
    s = np.asarray(size, dtype=np.float64)
    if s.shape != (3,):
        raise InvalidSize(f"size must be 3 numbers, got shape {s.shape}")
    if not np.all(np.isfinite(s)) or np.any(s <= 0.0):
        raise InvalidSize(f"size components must be positive and finite, got {s.tolist()}")
    s.flags.writeable = False
    return s


@dataclass(frozen=True)
class VirtualBox:
    """A labeled box instance placed in the world frame."""

    id: int
    world_T_obj: RigidTransform
    size: np.ndarray
    class_id: int
    class_name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "size", _check_size(self.size))
        if self.id < 0:
            raise InvalidSize(f"instance id must be non-negative, got {self.id}")


def box_local_vertices(size) -> np.ndarray:
    """The 8 object-frame corners of a box of the given size.

    Corner k has coordinates (sx*b0, sy*b1, -sz*b2) where b0 is the least
    significant bit of k. Corner 0 is the object-frame origin.
    """
    sx, sy, sz = np.asarray(size, dtype=np.float64)
    out = np.empty((8, 3))
    for k in range(8):
        out[k] = (sx * (k & 1), sy * ((k >> 1) & 1), -sz * ((k >> 2) & 1))
    return out


def box_vertices(box: VirtualBox) -> np.ndarray:
    """World-frame positions of the 8 corners, in binary-counter order."""
    return box.world_T_obj.transform_points(box_local_vertices(box.size))


# corner-index pairs of the 12 box edges, grouped by axis
BOX_EDGES = (
    (0, 1), (2, 3), (4, 5), (6, 7),  # x-direction
    (0, 2), (1, 3), (4, 6), (5, 7),  # y-direction
    (0, 4), (1, 5), (2, 6), (3, 7),  # z-direction
)


@dataclass
class InstanceSet:
    """Box instances plus the class-id to class-name table they reference."""

    class_table: dict[int, str] = field(default_factory=dict)
    instances: list[VirtualBox] = field(default_factory=list)

    def __post_init__(self):
        self._by_id = {}
        for b in self.instances:
            if b.id in self._by_id:
                raise DuplicateId(f"duplicate instance id {b.id}")
            if b.class_id not in self.class_table:
                raise ParseError(f"instance {b.id} references unknown class {b.class_id}")
            self._by_id[b.id] = b

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def get(self, instance_id: int) -> VirtualBox:
        try:
            return self._by_id[instance_id]
        except KeyError:
            raise NotFound(f"no instance with id {instance_id}")

    def next_id(self) -> int:
        return max(self._by_id, default=-1) + 1

    def add(self, box: VirtualBox) -> None:
        if box.id in self._by_id:
            raise DuplicateId(f"duplicate instance id {box.id}")
        if box.class_id not in self.class_table:
            raise ParseError(f"instance {box.id} references unknown class {box.class_id}")
        self.instances.append(box)
        self._by_id[box.id] = box

    def replace(self, box: VirtualBox) -> None:
        old = self.get(box.id)
        if box.class_id not in self.class_table:
            raise ParseError(f"instance {box.id} references unknown class {box.class_id}")
        self.instances[self.instances.index(old)] = box
        self._by_id[box.id] = box

    def remove(self, instance_id: int) -> None:
        box = self.get(instance_id)
        self.instances.remove(box)
        del self._by_id[instance_id]


def instances_from_dict(doc) -> InstanceSet:
    raw_classes = _require(doc, "classes", "instances file")
    if not isinstance(raw_classes, dict):
        raise ParseError("instances file: classes must be an object")
    class_table = {}
    for k, v in raw_classes.items():
        try:
            cid = int(k)
        except ValueError:
            raise ParseError(f"classes: key {k!r} is not an integer class id")
        if not isinstance(v, str):
            raise ParseError(f"classes[{k}]: name must be a string")
        class_table[cid] = v
    raw = _require(doc, "instances", "instances file")
    if not isinstance(raw, list):
        raise ParseError("instances file: instances must be a list")
    boxes = []
    for i, bd in enumerate(raw):
        where = f"instances[{i}]"
        bid = _int_id(_require(bd, "id", where), where)
        cid = _require(bd, "class_id", where)
        if not isinstance(cid, int) or isinstance(cid, bool):
            raise ParseError(f"{where}: class_id must be an integer")
        pose = _pose_from_value(_require(bd, "world_T_obj", where), where)
        size = _require(bd, "size", where)
        boxes.append(
            VirtualBox(
                id=bid,
                world_T_obj=pose,
                size=size,
                class_id=cid,
                class_name=class_table.get(cid, ""),
            )
        )
    return InstanceSet(class_table=class_table, instances=boxes)


def instance_to_dict(box: VirtualBox) -> dict:
    return {
        "id": box.id,
        "class_id": box.class_id,
        "world_T_obj": box.world_T_obj.as_flat(),
        "size": [float(s) for s in box.size],
    }


def instances_to_dict(iset: InstanceSet) -> dict:
    return {
        "classes": {str(k): iset.class_table[k] for k in sorted(iset.class_table)},
        "instances": [instance_to_dict(b) for b in iset.instances],
    }


def load_instances(path) -> InstanceSet:
    try:
        doc = load_json(path)
    except ValueError as e:
        raise ParseError(f"{path}: not valid JSON ({e})")
    except OSError as e:
        raise ParseError(f"{path}: cannot read instances file ({e})")
    return instances_from_dict(doc)


def save_instances(iset: InstanceSet, path) -> None:
    dump_json(instances_to_dict(iset), path)


def validate_images(fs: FrameSet, root=None) -> list[int]:
    """Ids of frames whose image file does not exist under ``root``.

    ``root`` defaults to the FrameSet's base_dir.
    """
    root = Path(root) if root is not None else fs.base_dir
    return [f.id for f in fs.frames if not (root / f.image_path).is_file()]
