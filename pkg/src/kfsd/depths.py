"""Functional depths: KFSD, FSD, HMD, FMD, MBD, RTD and IDD.

Two entry points per depth:

* scalar functions (``kfsd``, ``fsd``, ``hmd``, ...) score one query curve
  against a sample. ``kfsd`` and ``fsd`` are written term by term from their
  defining sums and double as references for the batch path;
* :func:`depth_of` / :func:`depth_all` score many curves at once through the
  compiled kernels in :mod:`kfsd.kernels`.

Larger values mean deeper (more central) curves.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels
from .errors import (
    DegenerateSample,
    DimensionMismatch,
    KFSDError,
    NonPositiveBandwidth,
    NonPositiveSigma,
    NumericalBreakdown,
)
from .fdata import Curve, FunctionalSample, Grid, distance_percentile, inner, l2_distance

DEPTH_IDS = ("FSD", "KFSD", "HMD", "FMD", "MBD", "RTD", "IDD")

# feature-space distances below this are numerically indistinguishable from 0
FEATURE_EPS = 1e-12
HMD_SCALE = 2.0 / math.sqrt(2.0 * math.pi)

DEFAULT_KFSD_PERCENTILE = 50
DEFAULT_HMD_PERCENTILE = 15
DEFAULT_PROJECTIONS = 50


@dataclass(frozen=True)
class KernelConfig:
    kind: str = "gaussian"
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "linear"):
            raise KFSDError(f"unsupported kernel {self.kind!r}")
        if self.kind == "gaussian":
            if self.sigma is None or not self.sigma > 0:
                raise NonPositiveSigma(f"gaussian kernel needs sigma > 0, got {self.sigma}")

    def __call__(self, a: Curve, b: Curve):
        if self.kind == "linear":
            return inner(a, b)
        return gaussian_kernel(a, b, self.sigma)


@dataclass(frozen=True, eq=False)
class ProjectionSet:
    """Random unit-norm directions shared by every curve of an experiment."""

    directions: np.ndarray
    grid: Grid
    seed: Optional[int] = None

    def __post_init__(self):
        dirs = np.atleast_2d(np.array(self.directions, dtype=float))
        if dirs.shape[0] < 1:
            raise KFSDError("a projection set needs at least one direction")
        if dirs.shape[1] != self.grid.m:
            raise DimensionMismatch("directions must live on the sample grid")
        norms = np.sqrt(dirs**2 @ self.grid.weights)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise KFSDError("directions must have unit L2 norm")
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)

    @classmethod
    def draw(cls, grid: Grid, R=DEFAULT_PROJECTIONS, seed=0):
        """Draw ``R`` discretized standard Gaussian directions, normalized."""
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal((R, grid.m))
        raw /= np.sqrt(raw**2 @ grid.weights)[:, None]
        return cls(raw, grid, seed)

    @property
    def R(self):
        return self.directions.shape[0]

    def project(self, values):
        """``(k, R)`` L2 inner products of each row with each direction.

        Summed row by row rather than through BLAS so a curve projects to the
        same bits whether it is queried alone or as part of a sample; ties
        between a query and a sample curve then stay exact.
        """
        values = np.atleast_2d(np.asarray(values, dtype=float))
        W = self.directions * self.grid.weights
        out = np.empty((values.shape[0], self.R))
        for r in range(self.R):
            out[:, r] = np.sum(values * W[r], axis=1)
        return out


@dataclass(frozen=True, eq=False)
class DepthSpec:
    """A depth together with its tuning parameters.

    ``percentile`` sets the bandwidth of KFSD (sigma) and HMD (h) from the
    sample's pairwise distances; an explicit ``bandwidth`` overrides it.
    RTD and IDD draw ``n_projections`` directions from ``projection_seed``
    unless a :class:`ProjectionSet` is given.
    """

    depth_id: str
    percentile: Optional[float] = None
    bandwidth: Optional[float] = None
    kernel: str = "gaussian"
    n_projections: int = DEFAULT_PROJECTIONS
    projection_seed: int = 0
    projections: Optional[ProjectionSet] = field(default=None, compare=False)

    def __post_init__(self):
        did = self.depth_id.upper()
        if did not in DEPTH_IDS:
            raise KFSDError(f"unknown depth {self.depth_id!r}; choose from {DEPTH_IDS}")
        object.__setattr__(self, "depth_id", did)
        if self.percentile is None and did in ("KFSD", "HMD"):
            default = DEFAULT_KFSD_PERCENTILE if did == "KFSD" else DEFAULT_HMD_PERCENTILE
            object.__setattr__(self, "percentile", default)

    def resolve(self, sample: FunctionalSample):
        """Freeze data-dependent parameters (bandwidth, projections) on ``sample``."""
        spec = self
        if spec.depth_id in ("KFSD", "HMD") and spec.bandwidth is None:
            if not (spec.depth_id == "KFSD" and spec.kernel == "linear"):
                spec = replace(spec, bandwidth=distance_percentile(sample, spec.percentile))
        if spec.depth_id in ("RTD", "IDD") and spec.projections is None:
            spec = replace(
                spec,
                projections=ProjectionSet.draw(
                    sample.grid, spec.n_projections, spec.projection_seed
                ),
            )
        return spec

    def params(self):
        out = {}
        if self.depth_id in ("KFSD", "HMD"):
            out["percentile"] = self.percentile
            out["bandwidth"] = self.bandwidth
        if self.depth_id == "KFSD":
            out["kernel"] = self.kernel
        if self.depth_id in ("RTD", "IDD"):
            out["n_projections"] = (
                self.projections.R if self.projections is not None else self.n_projections
            )
            out["projection_seed"] = (
                self.projections.seed if self.projections is not None else self.projection_seed
            )
        return out


@dataclass(frozen=True, eq=False)
class DepthScores:
    depth_id: str
    params: dict
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return self.values.size

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["curve_index", "depth"])
        for i, v in enumerate(self.values):
            writer.writerow([i, format(float(v), ".17g")])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# scalar forms


def gaussian_kernel(a: Curve, b: Curve, sigma):
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    d = l2_distance(a, b)
    return math.exp(-(d * d) / (sigma * sigma))


def _check_query(x: Curve, sample: FunctionalSample):
    if x.grid != sample.grid:
        raise DimensionMismatch("query curve and sample use different grids")


def fsd(x: Curve, sample: FunctionalSample):
    """Functional spatial depth from explicit unit vectors ``(x - y_i)/||x - y_i||``.

    Sample curves equal to ``x`` are skipped and the divisor counts only the
    curves kept.
    """
    _check_query(x, sample)
    w = sample.grid.weights
    total = np.zeros(sample.m)
    kept = 0
    for y in sample.values:
        diff = x.values - y
        norm = math.sqrt(float(np.dot(w * diff, diff)))
        if norm == 0.0:
            continue
        total += diff / norm
        kept += 1
    if kept == 0:
        raise DegenerateSample("no sample curve differs from the query")
    depth = 1.0 - math.sqrt(float(np.dot(w * total, total))) / kept
    return min(max(depth, 0.0), 1.0)


def kfsd(x: Curve, sample: FunctionalSample, kernel: KernelConfig):
    """KFSD by the double sum of kernel ratios over all kept pairs ``(i, j)``.

    O(n^2) kernel evaluations; :func:`depth_of` is the fast path.
    """
    _check_query(x, sample)
    curves = [sample.curve(i) for i in range(sample.n)]
    kept = [y for y in curves if l2_distance(x, y) > 0.0]
    if not kept:
        raise DegenerateSample("no sample curve differs from the query")
    kxx = kernel(x, x)
    kx = [kernel(x, y) for y in kept]
    feat = []
    for y, kxy in zip(kept, kx):
        if kernel.kind == "gaussian":
            d = l2_distance(x, y)
            f2 = -2.0 * math.expm1(-(d * d) / (kernel.sigma**2))
        else:
            f2 = kxx + kernel(y, y) - 2.0 * kxy
        f = math.sqrt(max(f2, 0.0))
        if f < FEATURE_EPS:
            raise NumericalBreakdown(
                "feature-space distance underflows; curve is too close to the query"
            )
        feat.append(f)
    total = 0.0
    for i, yi in enumerate(kept):
        for j, yj in enumerate(kept):
            num = kxx + kernel(yi, yj) - kx[i] - kx[j]
            total += num / (feat[i] * feat[j])
    depth = 1.0 - math.sqrt(max(total, 0.0)) / len(kept)
    return min(max(depth, 0.0), 1.0)


def hmd(x: Curve, sample: FunctionalSample, h):
    """h-modal depth: sum of ``2/sqrt(2 pi) exp(-||x - y_i||^2 / (2 h^2))``."""
    _check_query(x, sample)
    if not h > 0:
        raise NonPositiveBandwidth(f"h must be positive, got {h}")
    d2 = kernels.sq_dists(x.values[None, :], sample.values, sample.grid.weights)[0]
    return float(HMD_SCALE * np.exp(-d2 / (2.0 * h * h)).sum())


def fmd(x: Curve, sample: FunctionalSample):
    _check_query(x, sample)
    return float(_fmd(x.values[None, :], sample.values)[0])


def mbd(x: Curve, sample: FunctionalSample):
    _check_query(x, sample)
    return float(_mbd(x.values[None, :], sample.values)[0])


def rtd(x: Curve, sample: FunctionalSample, proj: ProjectionSet):
    _check_query(x, sample)
    return float(_rtd(proj.project(x.values[None, :]), proj.project(sample.values))[0])


def idd(x: Curve, sample: FunctionalSample, proj: ProjectionSet):
    _check_query(x, sample)
    return float(_idd(proj.project(x.values[None, :]), proj.project(sample.values))[0])


# ---------------------------------------------------------------------------
# batch forms: queries is a (q, m) matrix, sample an (n, m) FunctionalSample


def _kfsd_gaussian(D2q, Kyy, sigma):
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    D2q = np.asarray(D2q, dtype=float)
    pos = D2q > 0
    if not np.all(pos.any(axis=1)):
        raise DegenerateSample("a query has no sample curve at positive distance")
    feat2 = -2.0 * np.expm1(-D2q[pos] / (sigma * sigma))
    if feat2.size and feat2.min() < FEATURE_EPS**2:
        raise NumericalBreakdown(
            "feature-space distance underflows; sigma is too large for these curves"
        )
    depth = kernels.kfsd_gaussian(D2q, Kyy, sigma)
    return np.clip(depth, 0.0, 1.0)


def _fsd_batch(queries, sample):
    w = sample.grid.weights
    out = np.empty(queries.shape[0])
    for k, x in enumerate(queries):
        diff = x[None, :] - sample.values
        norms = np.sqrt((diff * diff) @ w)
        keep = norms > 0
        if not keep.any():
            raise DegenerateSample("no sample curve differs from the query")
        total = (diff[keep] / norms[keep, None]).sum(axis=0)
        out[k] = 1.0 - math.sqrt(float(total @ (w * total))) / keep.sum()
    return np.clip(out, 0.0, 1.0)


def _kfsd_linear_batch(queries, sample):
    # Gram-form KFSD with the L2 inner product as kernel
    w = sample.grid.weights
    Y = sample.values
    G = (Y * w) @ Y.T
    out = np.empty(queries.shape[0])
    for k, x in enumerate(queries):
        diff = x[None, :] - Y
        d2 = (diff * diff) @ w
        keep = d2 > 0
        if not keep.any():
            raise DegenerateSample("no sample curve differs from the query")
        kxx = float(x @ (w * x))
        kx = (Y * w) @ x
        a = np.zeros(Y.shape[0])
        a[keep] = 1.0 / np.sqrt(d2[keep])
        sa = a.sum()
        total = kxx * sa * sa + a @ G @ a - 2.0 * sa * (a @ kx)
        out[k] = 1.0 - math.sqrt(max(total, 0.0)) / keep.sum()
    return np.clip(out, 0.0, 1.0)


def _hmd_batch(D2q, h):
    if not h > 0:
        raise NonPositiveBandwidth(f"h must be positive, got {h}")
    return HMD_SCALE * np.exp(-np.asarray(D2q) / (2.0 * h * h)).sum(axis=1)


def _fmd(queries, Y):
    n = Y.shape[0]
    below, above = kernels.band_counts(queries, Y)
    cdf = (n - above) / n
    return np.mean(1.0 - np.abs(0.5 - cdf), axis=1)


def _pairs(k):
    return k * (k - 1) / 2.0


def _mbd(queries, Y):
    n = Y.shape[0]
    if n < 2:
        raise DegenerateSample("modified band depth needs at least two curves")
    below, above = kernels.band_counts(queries, Y)
    inside = _pairs(n) - _pairs(below) - _pairs(above)
    return np.mean(inside, axis=1) / _pairs(n)


def _rtd(Pq, Py):
    n = Py.shape[0]
    Ps = np.sort(Py, axis=0)
    depth = np.full(Pq.shape[0], np.inf)
    for r in range(Py.shape[1]):
        le = np.searchsorted(Ps[:, r], Pq[:, r], side="right")
        ge = n - np.searchsorted(Ps[:, r], Pq[:, r], side="left")
        depth = np.minimum(depth, np.minimum(le, ge) / n)
    return depth


def _idd(Pq, Py):
    n = Py.shape[0]
    if n < 2:
        raise DegenerateSample("integrated dual depth needs at least two curves")
    Ps = np.sort(Py, axis=0)
    acc = np.zeros(Pq.shape[0])
    for r in range(Py.shape[1]):
        lt = np.searchsorted(Ps[:, r], Pq[:, r], side="left")
        gt = n - np.searchsorted(Ps[:, r], Pq[:, r], side="right")
        acc += (_pairs(n) - _pairs(lt) - _pairs(gt)) / _pairs(n)
    return acc / Py.shape[1]


def _evaluate(queries, sample: FunctionalSample, spec: DepthSpec, D2q=None, Pq=None, Py=None):
    did = spec.depth_id
    if did == "KFSD":
        if spec.kernel == "linear":
            return _kfsd_linear_batch(queries, sample)
        if D2q is None:
            D2q = kernels.sq_dists(queries, sample.values, sample.grid.weights)
        Kyy = np.exp(-sample.sq_distances / spec.bandwidth**2)
        return _kfsd_gaussian(D2q, Kyy, spec.bandwidth)
    if did == "FSD":
        return _fsd_batch(queries, sample)
    if did == "HMD":
        if D2q is None:
            D2q = kernels.sq_dists(queries, sample.values, sample.grid.weights)
        return _hmd_batch(D2q, spec.bandwidth)
    if did == "FMD":
        return _fmd(queries, sample.values)
    if did == "MBD":
        return _mbd(queries, sample.values)
    if Py is None:
        Py = spec.projections.project(sample.values)
    if Pq is None:
        Pq = spec.projections.project(queries)
    if did == "RTD":
        return _rtd(Pq, Py)
    return _idd(Pq, Py)


def depth_of(queries, sample: FunctionalSample, spec: DepthSpec):
    """Depths of each row of ``queries`` relative to ``sample``.

    ``spec`` should already be resolved when the bandwidth must not follow
    ``sample`` (e.g. scoring smoothed curves against the original data).
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if queries.shape[1] != sample.m:
        raise DimensionMismatch("queries and sample use different grids")
    spec = spec.resolve(sample)
    return _evaluate(queries, sample, spec)


def depth_all(sample: FunctionalSample, spec, **kwargs):
    """Depth of every sample curve relative to the sample itself.

    ``spec`` is a :class:`DepthSpec` or a depth id, in which case ``kwargs``
    are forwarded to :class:`DepthSpec`.
    """
    if not isinstance(spec, DepthSpec):
        spec = DepthSpec(spec, **kwargs)
    spec = spec.resolve(sample)
    D2q = Pq = Py = None
    if spec.depth_id in ("KFSD", "HMD"):
        D2q = sample.sq_distances
    if spec.depth_id in ("RTD", "IDD"):
        Py = Pq = spec.projections.project(sample.values)
    values = _evaluate(sample.values, sample, spec, D2q=D2q, Pq=Pq, Py=Py)
    return DepthScores(spec.depth_id, spec.params(), values)
