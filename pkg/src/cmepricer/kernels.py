"""Kernel functions, lazy Gram-matrix sources, and the median heuristic."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DegenerateSample, DimensionMismatch, InvalidInput
from .lowrank import PsdMatrixSource

__all__ = [
    "KernelSpec",
    "SampleMatrix",
    "kernel_eval",
    "kernel_cross",
    "kernel_diag",
    "kernel_matrix_source",
    "median_heuristic",
]

_FAMILIES = ("polynomial", "matern32", "gaussian")

# Median-heuristic inputs above this size are subsampled (all-pairs distance
# enumeration is quadratic); the subsample is drawn with a fixed seed so the
# heuristic stays deterministic.
MEDIAN_SUBSAMPLE_LIMIT = 2000
MEDIAN_SUBSAMPLE_SEED = 0x5EED


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its hyperparameters.

    ``degree``/``offset`` apply to the polynomial family only,
    ``lengthscale`` to matern32 and gaussian only.
    """

    family: str
    degree: int = 4
    offset: float = 1.0
    lengthscale: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidInput(f"unknown kernel family {self.family!r}")
        if self.degree < 1:
            raise InvalidInput("polynomial degree must be at least 1")
        if self.offset < 0:
            raise InvalidInput("polynomial offset must be nonnegative")
        if self.lengthscale <= 0:
            raise InvalidInput("lengthscale must be positive")


@dataclass(frozen=True)
class SampleMatrix:
    """An (n, d) array of sample points; 1-D input is treated as d = 1."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise DimensionMismatch(f"expected an (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("sample points must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def kernel_cross(spec, a, b):
    """Kernel matrix ``[k(a_i, b_j)]`` for row-stacked points a (p,d), b (q,d)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"point dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    if spec.family == "polynomial":
        return (spec.offset + a @ b.T) ** spec.degree
    sq = np.maximum(
        np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * (a @ b.T),
        0.0,
    )
    r = np.sqrt(sq)
    if spec.family == "matern32":
        t = (np.sqrt(3.0) / spec.lengthscale) * r
        return (1.0 + t) * np.exp(-t)
    return np.exp(-0.5 * sq / spec.lengthscale**2)


def kernel_eval(spec, x, x2):
    """Evaluate ``k(x, x2)`` for two single points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape or x.ndim != 1:
        raise DimensionMismatch(f"incompatible point shapes {x.shape} and {x2.shape}")
    return float(kernel_cross(spec, x[None, :], x2[None, :])[0, 0])


def kernel_diag(spec, points):
    """Vector of ``k(x_i, x_i)`` without forming any cross terms."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if spec.family == "polynomial":
        return (spec.offset + np.sum(points * points, axis=1)) ** spec.degree
    return np.ones(points.shape[0])


class KernelMatrixSource(PsdMatrixSource):
    """Lazy Gram matrix of a kernel over a fixed sample; no (n, n) storage."""

    def __init__(self, spec, samples):
        self._spec = spec
        self._points = samples.points

    @property
    def dim(self):
        return self._points.shape[0]

    def diag(self, i):
        return float(kernel_diag(self._spec, self._points[i : i + 1])[0])

    def column(self, i):
        return kernel_cross(self._spec, self._points, self._points[i : i + 1])[:, 0]

    def diagonal(self):
        return kernel_diag(self._spec, self._points)


def kernel_matrix_source(spec, samples):
    """Gram-matrix source for ``spec`` over ``samples``."""
    return KernelMatrixSource(spec, samples)


def median_heuristic(values, subsample_limit=MEDIAN_SUBSAMPLE_LIMIT):
    """Median of pairwise distances ``|v_i - v_j|`` over distinct pairs.

    Uses the lower median (for M distances, the element of rank
    ``ceil(M / 2)``).  Inputs larger than ``subsample_limit`` are reduced to
    a fixed-seed subsample of that size before the all-pairs enumeration.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    n = values.shape[0]
    if n < 2:
        raise DegenerateSample("median heuristic needs at least two values")
    if n > subsample_limit:
        idx = np.random.default_rng(MEDIAN_SUBSAMPLE_SEED).choice(n, size=subsample_limit, replace=False)
        values = values[np.sort(idx)]
    dists = pdist(values)
    dists.sort()
    med = float(dists[(len(dists) - 1) // 2])
    if med == 0.0:
        raise DegenerateSample("median pairwise distance is zero")
    return med
