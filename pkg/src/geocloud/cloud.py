"""Point-cloud container and the Euclidean distance primitive."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, EmptyRequest


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered set of ``n`` points in ``R^m``, stored as a read-only float64 array.

    Parameters
    ----------
    points : array_like, shape (n, m)
        Coordinates. A 1-D array is read as ``n`` points in one dimension.
    label : str, optional
        Free-form tag (``"First"``, ``"sphere"``, a file name, ...).
    strict : bool
        When true, reject clouds containing repeated points.
    """

    points: np.ndarray
    label: Optional[str] = None
    strict: bool = field(default=False, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise DimensionError(f"points must be a 2-D array, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise EmptyRequest("a point cloud needs at least one point")
        if pts.shape[1] < 1:
            raise DimensionError("points need at least one coordinate")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if self.strict and np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise ValueError("duplicate points in a strict point cloud")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.points
        return self.points.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, PointCloud):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.points, other.points)

    __hash__ = None

    def with_label(self, label):
        return PointCloud(self.points, label=label)


def as_array(cloud) -> np.ndarray:
    """Return the (n, m) float64 coordinate array of a PointCloud or array-like."""
    if isinstance(cloud, PointCloud):
        return cloud.points
    arr = np.asarray(cloud, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"expected an (n, m) array, got shape {arr.shape}")
    return arr


def pairwise_distance(a, b) -> float:
    """Euclidean distance between two points of equal dimension."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def distance_matrix(p, q) -> np.ndarray:
    """All Euclidean distances between rows of ``p`` and rows of ``q``."""
    p = as_array(p)
    q = as_array(q)
    if p.shape[1] != q.shape[1]:
        raise DimensionError(f"dimension mismatch: {p.shape[1]} vs {q.shape[1]}")
    diff = p[:, None, :] - q[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def minmax_normalize(cloud):
    """Scale every axis of a cloud independently onto [0, 1].

    Constant axes map to 0.
    """
    pts = as_array(cloud)
    lo = pts.min(axis=0)
    span = pts.max(axis=0) - lo
    span[span == 0] = 1.0
    label = cloud.label if isinstance(cloud, PointCloud) else None
    return PointCloud((pts - lo) / span, label=label)
