"""Discretized functional data: grids, curves, samples and L2 geometry.

All curves of a sample live on one shared equidistant grid. Integrals are
approximated with the trapezoidal rule, so the L2 inner product of two
curves is ``sum(w * a * b)`` with ``w`` the trapezoid weights of the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import (
    DegenerateSample,
    DimensionMismatch,
    InvalidGrid,
    KFSDError,
    NonFiniteValue,
)

EQUIDISTANT_RTOL = 1e-9

LABEL_NORMAL = "normal"
LABEL_OUTLIER = "outlier"
LABEL_UNKNOWN = "unknown"
_LABELS = (LABEL_NORMAL, LABEL_OUTLIER, LABEL_UNKNOWN)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered, equidistant abscissae ``s_1 < ... < s_m``."""

    points: np.ndarray

    def __post_init__(self):
        pts = _readonly(np.ravel(self.points))
        if pts.size < 2:
            raise InvalidGrid("a grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise InvalidGrid("grid points must be finite")
        steps = np.diff(pts)
        if np.any(steps <= 0):
            raise InvalidGrid("grid points must be strictly increasing")
        h = (pts[-1] - pts[0]) / (pts.size - 1)
        if np.max(np.abs(steps - h)) > EQUIDISTANT_RTOL * max(abs(h), 1.0):
            raise InvalidGrid("grid points must be equidistant")
        object.__setattr__(self, "points", pts)

    @classmethod
    def linspace(cls, start, stop, m):
        return cls(np.linspace(start, stop, m))

    @property
    def m(self):
        return self.points.size

    @property
    def step(self):
        return (self.points[-1] - self.points[0]) / (self.m - 1)

    @cached_property
    def weights(self):
        """Trapezoid quadrature weights."""
        w = np.full(self.m, self.step)
        w[0] = w[-1] = 0.5 * self.step
        w.setflags(write=False)
        return w

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self is other or (
            self.m == other.m and np.array_equal(self.points, other.points)
        )

    def __hash__(self):
        return hash((self.m, self.points.tobytes()))


@dataclass(frozen=True, eq=False)
class Curve:
    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        vals = _readonly(np.ravel(self.values))
        if vals.size != self.grid.m:
            raise DimensionMismatch(
                f"curve has {vals.size} values but the grid has {self.grid.m} points"
            )
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValue(0, "curve contains non-finite values")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``n`` curves on one grid, stored as an ``(n, m)`` read-only matrix."""

    values: np.ndarray
    grid: Grid
    labels: Optional[tuple] = None
    _validated: bool = field(default=False, repr=False)

    def __post_init__(self):
        vals = _readonly(self.values)
        if vals.ndim != 2:
            raise DimensionMismatch("sample values must be a 2-D (n, m) matrix")
        if vals.shape[1] != self.grid.m:
            raise DimensionMismatch(
                f"rows have {vals.shape[1]} values but the grid has {self.grid.m} points"
            )
        if vals.shape[0] < 1:
            raise DimensionMismatch("a sample needs at least one curve")
        if not self._validated:
            bad = ~np.all(np.isfinite(vals), axis=1)
            if bad.any():
                raise NonFiniteValue(int(np.flatnonzero(bad)[0]))
        object.__setattr__(self, "values", vals)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != vals.shape[0]:
                raise DimensionMismatch("one label per curve is required")
            for lab in labels:
                if lab not in _LABELS:
                    raise KFSDError(f"unknown label {lab!r}")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def m(self):
        return self.values.shape[1]

    def __len__(self):
        return self.n

    def curve(self, i):
        return Curve(self.values[i], self.grid)

    def subset(self, index):
        """Sample made of the rows selected by ``index`` (mask or indices)."""
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        labels = None
        if self.labels is not None:
            labels = tuple(self.labels[i] for i in index)
        return FunctionalSample(self.values[index], self.grid, labels, _validated=True)

    def with_values(self, values):
        return FunctionalSample(values, self.grid)

    @cached_property
    def sq_distances(self):
        """``(n, n)`` squared L2 distances, zero diagonal, exactly symmetric."""
        d2 = kernels.sq_dists(self.values, self.values, self.grid.weights)
        d2 = np.triu(d2, 1)
        d2 = d2 + d2.T
        d2.setflags(write=False)
        return d2

    @cached_property
    def distances(self):
        d = np.sqrt(self.sq_distances)
        d.setflags(write=False)
        return d


def build_sample(matrix, grid: Grid, labels: Optional[Sequence[str]] = None):
    """Validate an ``(n, m)`` matrix and wrap it as a :class:`FunctionalSample`.

    Missing cells (``None``/NaN) are rejected, never imputed. The raised
    :class:`NonFiniteValue` carries the index of the first bad row.
    """
    try:
        arr = np.array(matrix, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"matrix is not rectangular numeric data: {exc}") from None
    if arr.ndim != 2:
        raise DimensionMismatch("expected a 2-D matrix with one curve per row")
    if arr.shape[1] != grid.m:
        raise DimensionMismatch(
            f"rows have {arr.shape[1]} values but the grid has {grid.m} points"
        )
    return FunctionalSample(arr, grid, None if labels is None else tuple(labels))


def _check_same_grid(a: Curve, b: Curve):
    if a.grid != b.grid:
        raise DimensionMismatch("curves are not defined on the same grid")


def inner(a: Curve, b: Curve):
    """Trapezoidal L2 inner product."""
    _check_same_grid(a, b)
    return float(np.dot(a.grid.weights * a.values, b.values))


def l2_distance(a: Curve, b: Curve):
    _check_same_grid(a, b)
    diff = a.values - b.values
    return math.sqrt(float(np.dot(a.grid.weights * diff, diff)))


def pairwise_distances(sample: FunctionalSample):
    """Cached L2 distance matrix of a sample."""
    return sample.distances


def _nearest_rank(count, p):
    """1-based nearest-rank index ``ceil(p * count / 100)``, exact for decimal p."""
    frac = Fraction(str(p)) if not isinstance(p, int) else Fraction(p)
    if not 0 < frac <= 100:
        raise KFSDError(f"percentile must lie in (0, 100], got {p}")
    k = math.ceil(frac * count / 100)
    return max(k, 1)


def percentile_nearest_rank(values, p):
    """Nearest-rank percentile of a 1-D collection."""
    v = np.sort(np.ravel(np.asarray(values, dtype=float)))
    if v.size == 0:
        raise KFSDError("cannot take a percentile of an empty collection")
    return float(v[_nearest_rank(v.size, p) - 1])


def distance_percentile(d, p):
    """Nearest-rank percentile of the distinct-pair distances.

    ``d`` is a distance matrix or a :class:`FunctionalSample`. Only the
    ``n(n-1)/2`` upper-triangle entries enter; the zero diagonal does not.
    """
    if isinstance(d, FunctionalSample):
        d = d.distances
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if n < 2:
        raise DegenerateSample("need at least two curves for pairwise distances")
    upper = d[np.triu_indices(n, 1)]
    if not np.any(upper > 0):
        raise DegenerateSample("all pairwise distances are zero")
    return percentile_nearest_rank(upper, p)


def sample_covariance(sample: FunctionalSample):
    """Unbiased ``(m, m)`` covariance of the discretized curves."""
    if sample.n < 2:
        raise DegenerateSample("covariance needs at least two curves")
    centered = sample.values - sample.values.mean(axis=0)
    cov = centered.T @ centered / (sample.n - 1)
    return 0.5 * (cov + cov.T)
