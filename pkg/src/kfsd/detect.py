"""Outlier detectors.

* ``kfsd_detect`` - KFSD_smo / KFSD_tri / KFSD_wei: the depth threshold is
  the largest value keeping the probabilistic false-alarm bound below the
  desired FAP, estimated on a smoothed resample of the data.
* ``fbp_detect`` - functional boxplot rule with any depth.
* ``bootstrap_detect`` - B_tri / B_wei: cutoff from the median of bootstrap
  1% depth percentiles, applied iteratively.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .depths import DepthScores, DepthSpec, depth_all, depth_of
from .errors import EmptyDepths, KFSDError
from .fdata import FunctionalSample, percentile_nearest_rank, sample_covariance
from .resample import GaussianFactor, ResampleScheme, SmoothingConfig, resample
from .serialize import canonical_json, config_hash, rows_to_csv
from .tune import TuningConfig, tune_percentile

KFSD_SCHEMES = {"smo": "simple", "tri": "trimmed", "wei": "weighted"}


@dataclass(frozen=True)
class DetectorConfig:
    """Settings of the KFSD detectors.

    ``alpha_T`` defaults to ``r`` and ``n_Z`` to ``nz_factor * n``. With
    ``sigma_percentile=None`` the percentile is tuned on the data.
    """

    scheme: str = "tri"
    delta: float = 0.05
    r: float = 0.05
    desired_fap: float = 0.10
    n_Z: Optional[int] = None
    nz_factor: int = 6
    gamma: float = 0.05
    alpha_T: Optional[float] = None
    sigma_percentile: Optional[float] = None
    tuning_J: int = 20

    def __post_init__(self):
        if self.scheme not in KFSD_SCHEMES:
            raise KFSDError(f"scheme must be one of {sorted(KFSD_SCHEMES)}")
        if not 0 < self.delta < 1:
            raise KFSDError("delta must lie in (0, 1)")
        if not 0 <= self.r < 1:
            raise KFSDError("r must lie in [0, 1)")
        if not 0 < self.desired_fap < 1:
            raise KFSDError("desired_fap must lie in (0, 1)")
        if self.n_Z is not None and self.n_Z < 1:
            raise KFSDError("n_Z must be at least 1")
        if self.nz_factor < 1:
            raise KFSDError("nz_factor must be at least 1")
        if not self.gamma > 0:
            raise KFSDError("gamma must be positive")

    @classmethod
    def for_alpha(cls, alpha, scheme="tri", **kwargs):
        """Settings used in the simulation study: ``r = alpha_T = alpha``."""
        return cls(scheme=scheme, r=alpha, alpha_T=alpha, **kwargs)

    def nz_for(self, n):
        return self.n_Z if self.n_Z is not None else self.nz_factor * n

    @property
    def trim(self):
        return self.alpha_T if self.alpha_T is not None else self.r


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 200
    scheme: str = "tri"
    gamma: float = 0.05
    alpha_T: float = 0.05
    percentile_level: float = 1.0

    def __post_init__(self):
        if self.B < 1:
            raise KFSDError("B must be at least 1")
        if self.scheme not in ("tri", "wei"):
            raise KFSDError("bootstrap scheme must be 'tri' or 'wei'")


@dataclass(eq=False)
class DetectionReport:
    """Outcome of one detector run.

    For the KFSD detectors ``flags[i] == (depth[i] <= threshold)`` and a
    missing threshold flags nothing. FBP and the bootstrap rules report
    ``threshold=None``; their cutoffs live in ``details``.
    """

    method: str
    flags: np.ndarray
    depth_scores: DepthScores
    threshold: Optional[float] = None
    tuned_percentile: Optional[float] = None
    seed: Optional[int] = None
    config: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def outliers(self):
        return np.flatnonzero(self.flags)

    def to_dict(self):
        return {
            "method": self.method,
            "flags": [bool(f) for f in self.flags],
            "outliers": self.outliers.tolist(),
            "threshold": self.threshold,
            "tuned_percentile": self.tuned_percentile,
            "seed": self.seed,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "depth": {
                "id": self.depth_scores.depth_id,
                "params": self.depth_scores.params,
                "values": [float(v) for v in self.depth_scores.values],
            },
            "details": self.details,
            "warnings": list(self.warnings),
        }

    def to_json(self):
        return canonical_json(self.to_dict())

    def flags_csv(self):
        rows = [
            [i, int(f), float(d)]
            for i, (f, d) in enumerate(zip(self.flags, self.depth_scores.values))
        ]
        return rows_to_csv(["curve_index", "outlier", "depth"], rows)

    def summary(self, one_based=True):
        idx = self.outliers + (1 if one_based else 0)
        listed = ", ".join(str(i) for i in idx) if idx.size else "-"
        return f"{self.method}: Curves detected as outliers: {listed}"


def _as_rng(rng):
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng)), int(rng)
    if rng is None:
        return np.random.default_rng(), None
    return rng, None


def threshold_cap(n_Z, delta, r, desired_fap):
    """Largest admissible fraction of resampled depths at or below the threshold."""
    return (1.0 - r) * desired_fap - math.sqrt(math.log(1.0 / delta) / (2.0 * n_Z))


def select_threshold(z_depths, delta, r, desired_fap):
    """Largest observed depth ``t`` with ``#{z <= t} / n_Z <= cap``, or None.

    ``cap`` subtracts the concentration term of the bound from ``(1 - r) FAP``.
    Tied depths are never split: when ties push the count over the cap the
    threshold steps down to the next smaller distinct value.
    """
    z = np.sort(np.ravel(np.asarray(z_depths, dtype=float)))
    n_Z = z.size
    if n_Z == 0:
        raise EmptyDepths("no resampled depths to threshold")
    cap = threshold_cap(n_Z, delta, r, desired_fap)
    if cap <= 0:
        return None
    K = math.floor(cap * n_Z)
    if K == 0:
        return None
    # walk down from the K-th order statistic past any ties crossing K
    i = K - 1
    while i >= 0 and np.searchsorted(z, z[i], side="right") > K:
        i -= 1
    if i < 0:
        return None
    return float(z[i])


def kfsd_detect(sample: FunctionalSample, config: DetectorConfig = DetectorConfig(), rng=None,
                factor=None):
    """Run KFSD_smo, KFSD_tri or KFSD_wei (per ``config.scheme``) on ``sample``."""
    rng, seed = _as_rng(rng)
    tune_rng, z_rng = rng.spawn(2)
    if factor is None:
        factor = GaussianFactor(sample_covariance(sample))

    tuned = None
    percentile = config.sigma_percentile
    if percentile is None:
        tcfg = TuningConfig(J=config.tuning_J, gamma=config.gamma)
        tuned = tune_percentile(sample, tcfg, tune_rng, factor=factor)
        percentile = tuned.percentile

    spec = DepthSpec("KFSD", percentile=percentile).resolve(sample)
    scores = depth_all(sample, spec)

    kind = KFSD_SCHEMES[config.scheme]
    scheme = ResampleScheme(
        kind,
        alpha_T=config.trim if kind == "trimmed" else None,
        depth_scores=scores if kind != "simple" else None,
    )
    n_Z = config.nz_for(sample.n)
    Z = resample(sample, scheme, n_Z, SmoothingConfig(config.gamma), z_rng, factor=factor)
    z_depths = depth_of(Z.values, sample, spec)

    t = select_threshold(z_depths, config.delta, config.r, config.desired_fap)
    warnings = []
    if t is None:
        flags = np.zeros(sample.n, dtype=bool)
        warnings.append(
            f"n_Z={n_Z} is too small for delta={config.delta}, r={config.r}, "
            f"FAP={config.desired_fap}: no threshold satisfies the bound, nothing flagged"
        )
    else:
        flags = scores.values <= t
    cfg = asdict(config)
    cfg["n_Z"] = n_Z
    details = {
        "cap": threshold_cap(n_Z, config.delta, config.r, config.desired_fap),
        "sigma": spec.bandwidth,
        "z_fraction_at_threshold": (
            float(np.mean(z_depths <= t)) if t is not None else 0.0
        ),
    }
    if tuned is not None:
        details["tuning_rank_sums"] = {str(k): v for k, v in tuned.rank_sums.items()}
        details["tuning_fallback"] = tuned.fallback
    return DetectionReport(
        method=f"KFSD_{config.scheme}",
        flags=flags,
        depth_scores=scores,
        threshold=t,
        tuned_percentile=percentile,
        seed=seed,
        config=cfg,
        details=details,
        warnings=warnings,
    )


def fbp_fences(sample: FunctionalSample, depth_scores, inflation=1.5):
    """Lower and upper fences of the functional boxplot.

    The central region is the pointwise envelope of the ``ceil(n/2)``
    deepest curves (ties by lower index); fences extend it by
    ``inflation`` times its height on each side.
    """
    values = np.asarray(getattr(depth_scores, "values", depth_scores), dtype=float)
    n = sample.n
    order = np.argsort(-values, kind="stable")
    central = sample.values[order[: math.ceil(n / 2)]]
    lo, hi = central.min(axis=0), central.max(axis=0)
    height = hi - lo
    return lo - inflation * height, hi + inflation * height


def fbp_detect(sample: FunctionalSample, depth_scores: DepthScores, inflation=1.5):
    """Flag every curve leaving the inflated central region at some grid point."""
    if sample.n < 2:
        raise KFSDError("the functional boxplot needs at least two curves")
    lower, upper = fbp_fences(sample, depth_scores, inflation)
    outside = (sample.values < lower) | (sample.values > upper)
    flags = outside.any(axis=1)
    return DetectionReport(
        method=f"FBP+{depth_scores.depth_id}",
        flags=flags,
        depth_scores=depth_scores,
        config={"inflation": inflation},
        details={"lower_fence": lower.tolist(), "upper_fence": upper.tolist()},
    )


def bootstrap_cutoff(sample: FunctionalSample, spec: DepthSpec, bcfg: BootstrapConfig, rng,
                     depths=None, factor=None):
    """Median over ``B`` smoothed resamples of the lower depth percentile.

    Each resample has ``n`` curves; depths inside a resample are taken
    relative to that resample with the parameters frozen in ``spec``.
    """
    if depths is None:
        depths = depth_all(sample, spec).values
    scores = DepthScores(spec.depth_id, spec.params(), depths)
    if bcfg.scheme == "tri":
        scheme = ResampleScheme("trimmed", alpha_T=bcfg.alpha_T, depth_scores=scores)
    else:
        scheme = ResampleScheme("weighted", depth_scores=scores)
    if factor is None:
        factor = GaussianFactor(sample_covariance(sample))
    smoothing = SmoothingConfig(bcfg.gamma)
    lows = np.empty(bcfg.B)
    for b in range(bcfg.B):
        Zb = resample(sample, scheme, sample.n, smoothing, rng, factor=factor)
        lows[b] = percentile_nearest_rank(depth_all(Zb, spec).values, bcfg.percentile_level)
    return float(np.median(lows)), lows


def bootstrap_detect(sample: FunctionalSample, spec: DepthSpec, bcfg: BootstrapConfig = BootstrapConfig(),
                     rng=None, factor=None):
    """B_tri / B_wei detection with the depth described by ``spec``.

    Curves with depth strictly below the cutoff are removed and depths are
    recomputed on what remains until no new curve falls below it. The cutoff
    and every depth parameter are fixed from the first iteration.
    """
    rng, seed = _as_rng(rng)
    if not isinstance(spec, DepthSpec):
        spec = DepthSpec(spec)
    spec = spec.resolve(sample)
    d0 = depth_all(sample, spec).values
    cutoff, lows = bootstrap_cutoff(sample, spec, bcfg, rng, depths=d0, factor=factor)

    flags = np.zeros(sample.n, dtype=bool)
    active = np.arange(sample.n)
    depths = d0
    iterations = 0
    while True:
        iterations += 1
        new = depths < cutoff
        if not new.any():
            break
        flags[active[new]] = True
        active = active[~new]
        if active.size < 2:
            break
        depths = depth_all(sample.subset(active), spec).values

    cfg = asdict(bcfg)
    return DetectionReport(
        method=f"B_{bcfg.scheme}+{spec.depth_id}",
        flags=flags,
        depth_scores=DepthScores(spec.depth_id, spec.params(), d0),
        seed=seed,
        config=cfg,
        details={"cutoff": cutoff, "iterations": iterations},
    )
