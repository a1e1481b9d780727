"""Smoothed resampling of functional samples.

A resampled curve is ``z = y_i + zeta`` where ``y_i`` is drawn with
replacement from the sample (uniformly, after trimming the least deep
curves, or with depth weights) and ``zeta`` is a fresh draw from a
zero-mean Gaussian with covariance ``gamma * Sigma``, ``Sigma`` being the
sample covariance of the full original sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .depths import DepthScores
from .errors import (
    EmptyPool,
    KFSDError,
    NonSymmetricCovariance,
    ZeroWeightSum,
)
from .fdata import Curve, FunctionalSample, sample_covariance

CLIP_RTOL = 1e-10
NEGATIVE_EIG_RTOL = 1e-8
SYMMETRY_RTOL = 1e-10

SCHEMES = ("simple", "trimmed", "weighted")


def rng_stream(seed, *stream_id):
    """Independent generator for ``(seed, stream_id...)``.

    The same key always reproduces the same draws; different keys give
    statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream_id))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class SmoothingConfig:
    gamma: float = 0.05
    clip_rtol: float = CLIP_RTOL

    def __post_init__(self):
        if not self.gamma > 0:
            raise KFSDError(f"gamma must be positive, got {self.gamma}")


class GaussianFactor:
    """Square root of a PSD covariance via eigen-decomposition.

    Eigenvalues below ``clip_rtol * max_eigenvalue`` (including the small
    negative ones produced by rounding) are set to zero, which keeps
    rank-deficient matrices (fewer curves than grid points) usable.
    """

    def __init__(self, cov, clip_rtol=CLIP_RTOL):
        cov = np.asarray(cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise NonSymmetricCovariance("covariance must be a square matrix")
        scale = max(np.max(np.abs(cov)), np.finfo(float).tiny)
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_RTOL * scale:
            raise NonSymmetricCovariance("covariance matrix is not symmetric")
        evals, evecs = np.linalg.eigh(0.5 * (cov + cov.T))
        top = max(evals[-1], 0.0)
        if evals[0] < -NEGATIVE_EIG_RTOL * top:
            raise KFSDError("covariance matrix is not positive semi-definite")
        evals = np.where(evals < clip_rtol * top, 0.0, evals)
        self.root = evecs * np.sqrt(evals)
        self.m = cov.shape[0]

    def draw(self, rng, size=None, scale=1.0):
        """``size`` draws (rows) from N(0, scale * cov); one vector if size is None."""
        k = 1 if size is None else size
        xi = rng.standard_normal((k, self.m))
        out = math.sqrt(scale) * (xi @ self.root.T)
        return out[0] if size is None else out


def gaussian_perturbation(cov, gamma, rng, grid=None):
    """One draw from N(0, gamma * cov); a :class:`Curve` when ``grid`` is given."""
    if not gamma > 0:
        raise KFSDError(f"gamma must be positive, got {gamma}")
    zeta = GaussianFactor(cov).draw(rng, scale=gamma)
    return zeta if grid is None else Curve(zeta, grid)


@dataclass(frozen=True, eq=False)
class ResampleScheme:
    kind: str = "simple"
    alpha_T: Optional[float] = None
    depth_scores: Optional[DepthScores] = None

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise KFSDError(f"unknown resampling scheme {self.kind!r}")
        if self.kind in ("trimmed", "weighted") and self.depth_scores is None:
            raise KFSDError(f"{self.kind} resampling needs depth scores")
        if self.kind == "trimmed":
            if self.alpha_T is None or not 0 < self.alpha_T < 1:
                raise KFSDError(f"alpha_T must lie in (0, 1), got {self.alpha_T}")
        if self.kind == "weighted":
            w = self.depth_scores.values
            if np.any(w < 0):
                raise KFSDError("resampling weights must be nonnegative")
            if not w.sum() > 0:
                raise ZeroWeightSum("depth weights sum to zero")


def n_trimmed(alpha_T, n):
    """Number of least-deep curves deleted: ``ceil(alpha_T * n)``."""
    # tolerance absorbs representation error such as 0.05 * 60 = 3.0000000000000004
    return math.ceil(alpha_T * n - 1e-9)


def trimmed_pool(depths, alpha_T):
    """Indices kept after removing the ``ceil(alpha_T n)`` least deep curves.

    Ties in depth are resolved by curve index: the lower index is removed first.
    """
    depths = np.asarray(depths, dtype=float)
    n = depths.size
    order = np.argsort(depths, kind="stable")
    removed = order[: n_trimmed(alpha_T, n)]
    return np.setdiff1d(np.arange(n), removed)


def draw_bases(scheme: ResampleScheme, n, n_Z, rng):
    """Indices of the ``n_Z`` base curves picked with replacement."""
    if scheme.kind == "simple":
        return rng.integers(0, n, size=n_Z)
    if scheme.kind == "trimmed":
        pool = trimmed_pool(scheme.depth_scores.values, scheme.alpha_T)
        if pool.size < 2:
            raise EmptyPool(f"only {pool.size} curves survive trimming")
        return pool[rng.integers(0, pool.size, size=n_Z)]
    w = np.asarray(scheme.depth_scores.values, dtype=float)
    return rng.choice(n, size=n_Z, replace=True, p=w / w.sum())


def resample(
    sample: FunctionalSample,
    scheme: ResampleScheme,
    n_Z,
    smoothing: SmoothingConfig,
    rng,
    return_indices=False,
    factor: Optional[GaussianFactor] = None,
):
    """Smoothed resample of ``n_Z`` curves.

    ``factor`` may carry a precomputed :class:`GaussianFactor` of the
    sample covariance to avoid repeating the eigen-decomposition.
    """
    if n_Z < 1:
        raise KFSDError("n_Z must be at least 1")
    if scheme.depth_scores is not None and len(scheme.depth_scores) != sample.n:
        raise KFSDError("depth scores do not match the sample size")
    bases = draw_bases(scheme, sample.n, n_Z, rng)
    if factor is None:
        if sample.n < 2:
            factor = GaussianFactor(np.zeros((sample.m, sample.m)))
        else:
            factor = GaussianFactor(sample_covariance(sample), smoothing.clip_rtol)
    zeta = factor.draw(rng, size=n_Z, scale=smoothing.gamma)
    out = FunctionalSample(sample.values[bases] + zeta, sample.grid, _validated=True)
    return (out, bases) if return_indices else out
