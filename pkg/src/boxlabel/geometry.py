"""Rigid-transform algebra and pinhole projection primitives.

Coordinate conventions used everywhere in this package:

    Camera frame (right-handed, standard computer vision):
      - origin at the optical center
      - +x right, +y down, +z forward along the optical axis

    Image frame:
      - origin at the top-left corner
      - u rightward, v downward, in pixels (sub-pixel precision)

    World frame: any fixed right-handed frame; poses are expressed as
    ``a_T_b`` objects mapping points from frame ``b`` into frame ``a``.

All translations and sizes are in meters. Images are assumed rectified;
there is no lens distortion model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateDepth, InvalidPose

# Constructor tolerance: rotations further than this from orthonormal are
# rejected; anything closer is snapped to the nearest rotation.
ROTATION_TOLERANCE = 1e-6


def _as_rotation(matrix) -> np.ndarray:
    """Validate a 3x3 rotation and snap it to the nearest exact rotation.

    File round-trips introduce noise at the last serialized digit, so inputs
    within ROTATION_TOLERANCE of orthonormal are re-orthonormalized via polar
    decomposition (R = U V^T from the SVD). Anything worse is garbage and is
    rejected.
    """
    r = np.asarray(matrix, dtype=np.float64)
    if r.shape != (3, 3):
        raise InvalidPose(f"rotation must be 3x3, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise InvalidPose("rotation contains non-finite values")
    err = np.abs(r.T @ r - np.eye(3)).max()
    if err > ROTATION_TOLERANCE:
        raise InvalidPose(f"rotation is not orthonormal (max deviation {err:.3e})")
    if abs(np.linalg.det(r) - 1.0) > ROTATION_TOLERANCE:
        raise InvalidPose("rotation has determinant != +1 (reflection or scale)")
    u, _, vt = np.linalg.svd(r)
    nearest = u @ vt
    # SVD sign ambiguity cannot flip the determinant here because det(r) ~ +1
    nearest.flags.writeable = False
    return nearest


@dataclass(frozen=True)
class RigidTransform:
    """A 6-DoF pose: rotation (3x3 orthonormal) plus translation (meters).

    Immutable after construction. Composition follows the usual frame-chain
    reading: if ``a_T_b`` maps b-frame points into frame a, then
    ``a_T_b.compose(b_T_c)`` yields ``a_T_c``.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", _as_rotation(self.rotation))
        t = np.asarray(self.translation, dtype=np.float64).reshape(3).copy()
        if not np.all(np.isfinite(t)):
            raise InvalidPose("translation contains non-finite values")
        t.flags.writeable = False
        object.__setattr__(self, "translation", t)

    @classmethod
    def _trusted(cls, rotation: np.ndarray, translation: np.ndarray) -> "RigidTransform":
        # fast path for internally produced values (products and transposes of
        # already-validated rotations); skips the SVD snap
        t = cls.__new__(cls)
        rotation = np.ascontiguousarray(rotation)
        rotation.flags.writeable = False
        translation = np.ascontiguousarray(translation)
        translation.flags.writeable = False
        object.__setattr__(t, "rotation", rotation)
        object.__setattr__(t, "translation", translation)
        return t

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_matrix(cls, m) -> "RigidTransform":
        """Build from a 4x4 homogeneous matrix (bottom row ignored)."""
        m = np.asarray(m, dtype=np.float64).reshape(4, 4)
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_flat(cls, values) -> "RigidTransform":
        """Build from 16 row-major numbers (the file representation)."""
        return cls.from_matrix(np.asarray(values, dtype=np.float64).reshape(4, 4))

    @classmethod
    def from_quaternion(cls, q, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        """Build from a quaternion (w, x, y, z); normalized internally."""
        return cls(rotation_from_quaternion(q), translation)

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def as_flat(self) -> list[float]:
        """Row-major 16-number form used in project files."""
        return [float(x) for x in self.as_matrix().reshape(16)]

    def as_quaternion(self) -> np.ndarray:
        return quaternion_from_rotation(self.rotation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """Chain two transforms: (a_T_b).compose(b_T_c) -> a_T_c.

        The product of two orthonormal matrices is orthonormal to machine
        precision, so no re-validation happens here; drift over thousands of
        compositions stays far below the 1e-9 working tolerance.
        """
        return RigidTransform._trusted(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        return self.compose(other)

    def invert(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform._trusted(rt, -rt @ self.translation)

    def transform_points(self, points) -> np.ndarray:
        """Apply to an (..., 3) array (or single 3-vector): R p + t.

        Written as explicit per-component arithmetic rather than a matmul so
        results are bitwise identical regardless of batch shape (BLAS kernels
        vary their reduction order with the operand size).
        """
        p = np.asarray(points, dtype=np.float64)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        r, t = self.rotation, self.translation
        out = np.empty(p.shape, dtype=np.float64)
        out[..., 0] = r[0, 0] * x + r[0, 1] * y + r[0, 2] * z + t[0]
        out[..., 1] = r[1, 0] * x + r[1, 1] * y + r[1, 2] * z + t[1]
        out[..., 2] = r[2, 0] * x + r[2, 1] * y + r[2, 2] * z + t[2]
        return out


class PixelPoint(NamedTuple):
    """Sub-pixel image location; origin top-left, u rightward, v downward."""

    u: float
    v: float


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics: focal lengths, principal point, image size (pixels)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("image size must be positive")

    def project(self, p_cam) -> PixelPoint:
        """Project one camera-frame point to pixels.

        Raises DegenerateDepth when z <= 0: the caller is expected to clip
        against a near plane first.
        """
        x, y, z = np.asarray(p_cam, dtype=np.float64).reshape(3)
        if z <= 0.0:
            raise DegenerateDepth(f"point depth z={z} is not in front of the camera")
        return PixelPoint(self.fx * x / z + self.cx, self.fy * y / z + self.cy)

    def project_points(self, pts) -> np.ndarray:
        """Vectorized projection of (..., 3) camera-frame points to (..., 2).

        No depth checks: callers must already have ensured z > 0.
        """
        pts = np.asarray(pts, dtype=np.float64)
        z = pts[..., 2]
        u = self.fx * pts[..., 0] / z + self.cx
        v = self.fy * pts[..., 1] / z + self.cy
        return np.stack([u, v], axis=-1)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    return a.compose(b)


def invert(t: RigidTransform) -> RigidTransform:
    return t.invert()


def transform_points(t: RigidTransform, points) -> np.ndarray:
    return t.transform_points(points)


def project_point(cam: CameraModel, p_cam) -> PixelPoint:
    return cam.project(p_cam)


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_quaternion(q) -> np.ndarray:
    """Rotation matrix from quaternion (w, x, y, z); not necessarily unit."""
    w, x, y, z = np.asarray(q, dtype=np.float64).reshape(4)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise InvalidPose("zero quaternion")
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quaternion_from_rotation(r) -> np.ndarray:
    """Unit quaternion (w, x, y, z) for a rotation matrix, w >= 0."""
    r = np.asarray(r, dtype=np.float64)
    t = np.trace(r)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(r)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = math.sqrt(max(r[i, i] - r[j, j] - r[k, k] + 1.0, 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (r[k, j] - r[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (r[j, i] + r[i, j]) / s
        q[1 + k] = (r[k, i] + r[i, k]) / s
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    return q
