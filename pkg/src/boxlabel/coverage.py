"""Viewpoint coverage: where has the camera actually been, per object?

Each frame's camera position is expressed in the object's frame and reduced
to a direction (azimuth theta, polar angle phi). Aggregating directions over
a sequence gives a 2D histogram whose empty cells are viewpoints the dataset
never saw; a detector trained on it will be weak there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CoincidentPosition, ParseError
from .jsonio import dump_json
from .labeler import DEFAULT_CONFIG, LabelerConfig, label_frame
from .scene import FrameSet, InstanceSet, VirtualBox

DEFAULT_THETA_BINS = 36  # 10 degree cells
DEFAULT_PHI_BINS = 18


@dataclass(frozen=True)
class PolarViewpoint:
    """Camera position in an object's frame, spherical form.

    r: distance (meters); theta: azimuth atan2(y, x) in [-pi, pi);
    phi: angle from the object +z axis in [0, pi].
    """

    r: float
    theta: float
    phi: float


def camera_in_object_frame(frame, box: VirtualBox) -> PolarViewpoint:
    """Polar coordinates of the frame's camera in the box's frame."""
    obj_T_cam = box.world_T_obj.invert().compose(frame.world_T_cam)
    x, y, z = obj_T_cam.translation
    r = math.sqrt(x * x + y * y + z * z)
    if r < 1e-12:
        raise CoincidentPosition(
            f"camera of frame {frame.id} sits at the origin of instance {box.id}"
        )
    theta = math.atan2(y, x)
    if theta == math.pi:  # atan2 range is (-pi, pi]; fold onto [-pi, pi)
        theta = -math.pi
    phi = math.acos(max(-1.0, min(1.0, z / r)))
    return PolarViewpoint(r=r, theta=theta, phi=phi)


@dataclass(frozen=True)
class CoverageHistogram:
    """Counts per (theta, phi) direction cell.

    counts has shape (phi_bins, theta_bins): one row per phi-bin. Bins are
    half-open and uniform; theta covers [-pi, pi), phi covers [0, pi] with
    phi = pi folded into the last row.
    """

    theta_bins: int
    phi_bins: int
    counts: np.ndarray
    total: int

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (self.phi_bins, self.theta_bins):
            raise ValueError(
                f"counts shape {counts.shape} does not match "
                f"(phi_bins={self.phi_bins}, theta_bins={self.theta_bins})"
            )
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        if int(counts.sum()) != self.total:
            raise ValueError(f"total {self.total} != sum of counts {int(counts.sum())}")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)

    def merge(self, other: "CoverageHistogram") -> "CoverageHistogram":
        if (self.theta_bins, self.phi_bins) != (other.theta_bins, other.phi_bins):
            raise ValueError("cannot merge histograms with different binning")
        return CoverageHistogram(
            theta_bins=self.theta_bins,
            phi_bins=self.phi_bins,
            counts=self.counts + other.counts,
            total=self.total + other.total,
        )


def parse_bins(bins: str) -> tuple[int, int]:
    """'36x18' -> (36, 18); raises ParseError on anything else."""
    try:
        a, b = bins.lower().split("x")
        t, p = int(a), int(b)
    except ValueError as e:
        raise ParseError(f"bins must look like 36x18, got {bins!r}") from e
    if t < 1 or p < 1:
        raise ParseError(f"bins must be positive, got {bins!r}")
    return t, p


def bin_of(vp: PolarViewpoint, theta_bins: int, phi_bins: int) -> tuple[int, int]:
    """(theta_bin, phi_bin) of a viewpoint under the uniform binning."""
    ti = int((vp.theta + math.pi) / (2.0 * math.pi) * theta_bins)
    ti = min(max(ti, 0), theta_bins - 1)
    pi_ = int(vp.phi / math.pi * phi_bins)
    pi_ = min(max(pi_, 0), phi_bins - 1)
    return ti, pi_


def coverage_histogram(
    frames: FrameSet,
    box: VirtualBox,
    theta_bins: int = DEFAULT_THETA_BINS,
    phi_bins: int = DEFAULT_PHI_BINS,
    visible_only: bool = False,
    cfg: LabelerConfig = DEFAULT_CONFIG,
) -> CoverageHistogram:
    """Histogram the camera directions of all frames around one object.

    With visible_only, frames whose annotation for this box was dropped by
    the labeler (out of view, too small) do not count; the total then equals
    the number of counted frames, keeping the conservation invariant.
    """
    if theta_bins < 1 or phi_bins < 1:
        raise ValueError("bin counts must be at least 1")
    counts = np.zeros((phi_bins, theta_bins), dtype=np.int64)
    total = 0
    only = None
    if visible_only:
        only = InstanceSet(
            class_table={box.class_id: box.class_name}, instances=[box]
        )
    for frame in frames:
        if only is not None:
            labeled = label_frame(frame, only, cfg)
            if not labeled.annotations:
                continue
        vp = camera_in_object_frame(frame, box)
        ti, pi_ = bin_of(vp, theta_bins, phi_bins)
        counts[pi_, ti] += 1
        total += 1
    return CoverageHistogram(
        theta_bins=theta_bins, phi_bins=phi_bins, counts=counts, total=total
    )


def coverage_gaps(hist: CoverageHistogram, min_count: int) -> list[tuple[int, int, int]]:
    """All (theta_bin, phi_bin, count) cells with count < min_count.

    Sorted ascending by count, then theta_bin, then phi_bin.
    """
    gaps = []
    for pi_ in range(hist.phi_bins):
        for ti in range(hist.theta_bins):
            c = int(hist.counts[pi_, ti])
            if c < min_count:
                gaps.append((ti, pi_, c))
    gaps.sort(key=lambda g: (g[2], g[0], g[1]))
    return gaps


def histogram_to_dict(hist: CoverageHistogram) -> dict:
    return {
        "theta_bins": hist.theta_bins,
        "phi_bins": hist.phi_bins,
        "counts": [[int(c) for c in row] for row in hist.counts],
        "total": hist.total,
    }


def save_histogram_json(hist: CoverageHistogram, path) -> None:
    dump_json(histogram_to_dict(hist), path)


def save_histogram_csv(hist: CoverageHistogram, path) -> None:
    """One row per phi-bin, theta-bins as columns."""
    lines = [",".join(str(int(c)) for c in row) for row in hist.counts]
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")
