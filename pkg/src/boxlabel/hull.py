"""Visual-hull carving: a coarse box for objects with no CAD model.

The user outlines the object in two or more frames; a voxel grid spanning a
working volume is then carved so only voxels whose projections fall strictly
inside every outline survive. The surviving blob (the visual hull) gets
summarized as an axis-aligned VirtualBox: identity rotation, size from the
voxel extents, ready for manual refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyHull, ParseError, TooFewViews
from .geometry import RigidTransform
from .jsonio import dump_json, load_json
from .scene import FrameSet, VirtualBox

DEFAULT_RESOLUTION = 0.005  # meters; tabletop scale
DEFAULT_NEAR_PLANE = 0.01


def _segments_intersect(p1, p2, p3, p4) -> bool:
    """True when closed segments p1p2 and p3p4 share any point."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    def on_segment(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(
            a[1], b[1]
        )

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(p1, p2, p3):
        return True
    if o2 == 0 and on_segment(p1, p2, p4):
        return True
    if o3 == 0 and on_segment(p3, p4, p1):
        return True
    if o4 == 0 and on_segment(p3, p4, p2):
        return True
    return False


def _validate_polygon(poly: np.ndarray) -> None:
    n = len(poly)
    if n < 3:
        raise ValueError(f"polygon needs at least 3 vertices, got {n}")
    if not np.all(np.isfinite(poly)):
        raise ValueError("polygon contains non-finite coordinates")
    # shoelace area
    x, y = poly[:, 0], poly[:, 1]
    area = 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    if area <= 0.0:
        raise ValueError("polygon has zero area")
    segs = [(tuple(poly[i]), tuple(poly[(i + 1) % n])) for i in range(n)]
    for i in range(n):
        a, b = segs[i]
        if a == b:
            raise ValueError(f"polygon repeats vertex {a}")
        for j in range(i + 1, n):
            # adjacent segments share one vertex by construction; skip them
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(a, b, *segs[j]):
                raise ValueError("polygon is self-intersecting")


@dataclass(frozen=True)
class SilhouetteMask:
    """A hand-drawn object outline on one frame (simple polygon, pixels)."""

    frame_id: int
    polygon: np.ndarray

    def __post_init__(self):
        poly = np.asarray(self.polygon, dtype=np.float64)
        if poly.ndim != 2 or poly.shape[1] != 2:
            raise ValueError(f"polygon must be an (N, 2) array, got shape {poly.shape}")
        _validate_polygon(poly)
        poly.flags.writeable = False
        object.__setattr__(self, "polygon", poly)


def points_in_polygon(u, v, polygon) -> np.ndarray:
    """Even-odd test for arrays of pixel coordinates; boundary counts as outside."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    poly = np.asarray(polygon, dtype=np.float64)
    inside = np.zeros(u.shape, dtype=bool)
    on_edge = np.zeros(u.shape, dtype=bool)
    n = len(poly)
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[(i + 1) % n]
        # horizontal-ray crossing count (half-open in y so vertices count once)
        cond = (yi > v) != (yj > v)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_int = xi + (v - yi) * (xj - xi) / (yj - yi)
        inside ^= cond & (u < x_int)
        # exact on-segment test
        colinear = (xj - xi) * (v - yi) - (yj - yi) * (u - xi) == 0.0
        in_bounds = (
            (np.minimum(xi, xj) <= u)
            & (u <= np.maximum(xi, xj))
            & (np.minimum(yi, yj) <= v)
            & (v <= np.maximum(yi, yj))
        )
        on_edge |= colinear & in_bounds
    return inside & ~on_edge


@dataclass(frozen=True)
class VoxelHull:
    """Dense boolean occupancy over a regular grid anchored at ``origin``."""

    origin: np.ndarray
    resolution: float
    dims: tuple[int, int, int]
    occupancy: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3).copy()
        origin.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.shape != self.dims:
            raise ValueError(f"occupancy shape {occ.shape} does not match dims {self.dims}")
        occ.flags.writeable = False
        object.__setattr__(self, "occupancy", occ)

    def voxel_count(self) -> int:
        return int(self.occupancy.sum())

    def occupied_centers(self) -> np.ndarray:
        """(M, 3) world-frame centers of occupied voxels."""
        idx = np.argwhere(self.occupancy)
        return self.origin + (idx + 0.5) * self.resolution

    def centroid(self) -> np.ndarray:
        centers = self.occupied_centers()
        if len(centers) == 0:
            raise EmptyHull("hull has no occupied voxels")
        return centers.mean(axis=0)


def _axis_count(lo: float, hi: float, res: float) -> int:
    n = (hi - lo) / res
    if abs(n - round(n)) < 1e-6:
        return max(1, int(round(n)))
    return max(1, int(math.ceil(n)))


def carve(
    masks,
    frames: FrameSet,
    volume,
    resolution: float = DEFAULT_RESOLUTION,
    near_plane: float = DEFAULT_NEAR_PLANE,
) -> VoxelHull:
    """Intersect the silhouette frustums of >= 2 views on a voxel grid.

    volume is ((x0, y0, z0), (x1, y1, z1)) in the world frame. A voxel
    survives iff its center projects strictly inside every mask's polygon
    and sits in front of the camera (z > near_plane) in every view.
    """
    masks = list(masks)
    if len({m.frame_id for m in masks}) < 2:
        raise TooFewViews(
            f"carving needs masks on at least 2 distinct frames, got {len(masks)}"
        )
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    lo = np.asarray(volume[0], dtype=np.float64).reshape(3)
    hi = np.asarray(volume[1], dtype=np.float64).reshape(3)
    if not np.all(hi > lo):
        raise ValueError(f"volume must have positive extent, got {lo} .. {hi}")

    dims = tuple(_axis_count(lo[i], hi[i], resolution) for i in range(3))
    axes = [lo[i] + (np.arange(dims[i]) + 0.5) * resolution for i in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=-1)

    alive = np.ones(len(centers), dtype=bool)
    for mask in masks:
        if not alive.any():
            break
        frame = frames.get(mask.frame_id)
        p_cam = frame.world_T_cam.invert().transform_points(centers[alive])
        z = p_cam[:, 2]
        ok = z > near_plane
        u = np.full(len(p_cam), np.nan)
        v = np.full(len(p_cam), np.nan)
        cam = frame.camera
        u[ok] = cam.fx * p_cam[ok, 0] / z[ok] + cam.cx
        v[ok] = cam.fy * p_cam[ok, 1] / z[ok] + cam.cy
        ok[ok] &= points_in_polygon(u[ok], v[ok], mask.polygon)
        idx = np.flatnonzero(alive)
        alive[idx[~ok]] = False

    if not alive.any():
        raise EmptyHull(
            "no voxel projects inside every mask; check the masks and the working volume"
        )
    return VoxelHull(
        origin=lo,
        resolution=resolution,
        dims=dims,
        occupancy=alive.reshape(dims),
    )


def hull_to_instance(
    hull: VoxelHull, class_id: int, instance_id: int = 0, class_name: str = ""
) -> VirtualBox:
    """Summarize a hull as an axis-aligned box (identity rotation).

    The box spans the occupied voxels' extents plus half a voxel on each
    side, so its size is the center extents plus one voxel per axis.
    """
    centers = hull.occupied_centers()
    if len(centers) == 0:
        raise EmptyHull("cannot build an instance from an empty hull")
    mins = centers.min(axis=0)
    maxs = centers.max(axis=0)
    size = maxs - mins + hull.resolution
    half = hull.resolution / 2.0
    # corner-origin convention: box occupies [0,sx]x[0,sy]x[-sz,0] locally,
    # so the translation is the (min x, min y, max z) corner of the span
    translation = np.array([mins[0] - half, mins[1] - half, maxs[2] + half])
    return VirtualBox(
        id=instance_id,
        world_T_obj=RigidTransform(np.eye(3), translation),
        size=size,
        class_id=class_id,
        class_name=class_name,
    )


def masks_from_dict(doc) -> list[SilhouetteMask]:
    if not isinstance(doc, dict) or "masks" not in doc:
        raise ParseError("masks file must be an object with a masks list")
    raw = doc["masks"]
    if not isinstance(raw, list):
        raise ParseError("masks must be a list")
    out = []
    for i, md in enumerate(raw):
        where = f"masks[{i}]"
        if not isinstance(md, dict) or "frame_id" not in md or "polygon" not in md:
            raise ParseError(f"{where}: need frame_id and polygon")
        fid = md["frame_id"]
        if not isinstance(fid, int) or isinstance(fid, bool):
            raise ParseError(f"{where}: frame_id must be an integer")
        try:
            out.append(SilhouetteMask(frame_id=fid, polygon=md["polygon"]))
        except ValueError as e:
            raise ParseError(f"{where}: {e}")
    return out


def masks_to_dict(masks) -> dict:
    return {
        "masks": [
            {"frame_id": m.frame_id, "polygon": [[float(u), float(v)] for u, v in m.polygon]}
            for m in masks
        ]
    }


def load_masks(path) -> list[SilhouetteMask]:
    try:
        doc = load_json(path)
    except ValueError as e:
        raise ParseError(f"{path}: not valid JSON ({e})")
    except OSError as e:
        raise ParseError(f"{path}: cannot read masks file ({e})")
    return masks_from_dict(doc)


def save_masks(masks, path) -> None:
    dump_json(masks_to_dict(masks), path)


def save_hull(hull: VoxelHull, path) -> None:
    """Write the occupancy grid as raw bytes plus a JSON sidecar.

    ``path`` gets the binary (one byte per voxel, C order); ``path.json``
    records origin, resolution and dims for reloading.
    """
    path = Path(path)
    path.write_bytes(hull.occupancy.astype(np.uint8).tobytes())
    dump_json(
        {
            "origin": [float(x) for x in hull.origin],
            "resolution": hull.resolution,
            "dims": list(hull.dims),
        },
        path.with_suffix(path.suffix + ".json"),
    )


def load_hull(path) -> VoxelHull:
    path = Path(path)
    meta = load_json(path.with_suffix(path.suffix + ".json"))
    dims = tuple(int(d) for d in meta["dims"])
    raw = np.frombuffer(path.read_bytes(), dtype=np.uint8)
    if raw.size != dims[0] * dims[1] * dims[2]:
        raise ParseError(f"{path}: binary size {raw.size} does not match dims {dims}")
    return VoxelHull(
        origin=meta["origin"],
        resolution=float(meta["resolution"]),
        dims=dims,
        occupancy=raw.reshape(dims).astype(bool),
    )
