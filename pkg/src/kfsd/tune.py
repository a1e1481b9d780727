"""Choosing the KFSD bandwidth percentile from pseudo-outliers.

Without labels, peripheral training curves are manufactured from the data:
in each of ``J`` replications a random candidate percentile orders the
sample by KFSD, a Binomial(n, 1/n) number of the least deep curves is
taken, and each is perturbed with the smoothing noise. The percentile that
ranks these peripheral curves lowest among the sample depths wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .depths import DepthSpec, depth_all, depth_of
from .errors import AllReplicationsEmpty, EmptyPeripheralSet, KFSDError
from .fdata import FunctionalSample, sample_covariance
from .resample import GaussianFactor
from .serialize import rows_to_csv

DEFAULT_PERCENTILES = tuple(range(10, 100, 10))
FALLBACK_PERCENTILE = 50


@dataclass(frozen=True)
class TuningConfig:
    percentiles: tuple = DEFAULT_PERCENTILES
    J: int = 20
    gamma: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "percentiles", tuple(self.percentiles))
        if len(self.percentiles) < 1:
            raise KFSDError("at least one candidate percentile is required")
        if self.J < 1:
            raise KFSDError("J must be at least 1")


@dataclass(frozen=True, eq=False)
class PeripheralSet:
    """Smoothed peripheral curves and where each one came from."""

    curves: np.ndarray
    replication: np.ndarray
    source: np.ndarray
    percentile: np.ndarray
    draws: tuple = field(default=())  # (percentile p_j, l_j) per replication

    @property
    def L(self):
        return self.curves.shape[0]


@dataclass
class TuningResult:
    percentile: float
    rank_sums: dict
    peripheral: PeripheralSet | None
    fallback: bool = False

    def trace_csv(self):
        rows = []
        draws = self.peripheral.draws if self.peripheral is not None else ()
        for j, (p, l) in enumerate(draws):
            rows.append([j, p, l, self.percentile])
        return rows_to_csv(["replication", "percentile", "l", "chosen_percentile"], rows)


class _DepthCache:
    """KFSD depths of the sample for each percentile, computed once."""

    def __init__(self, sample):
        self.sample = sample
        self._specs = {}
        self._depths = {}

    def spec(self, p):
        if p not in self._specs:
            self._specs[p] = DepthSpec("KFSD", percentile=p).resolve(self.sample)
        return self._specs[p]

    def depths(self, p):
        if p not in self._depths:
            self._depths[p] = depth_all(self.sample, self.spec(p)).values
        return self._depths[p]


def _factor(sample, factor):
    if factor is not None:
        return factor
    return GaussianFactor(sample_covariance(sample))


def _build(sample, cfg, rng, factor, cache, l_values):
    n = sample.n
    curves, reps, sources, pcts, draws = [], [], [], [], []
    for j in range(cfg.J):
        p = cfg.percentiles[rng.integers(len(cfg.percentiles))]
        l = int(rng.binomial(n, 1.0 / n)) if l_values is None else int(l_values[j])
        draws.append((p, l))
        if l == 0:
            continue
        order = np.argsort(cache.depths(p), kind="stable")[:l]
        noise = factor.draw(rng, size=l, scale=cfg.gamma)
        curves.append(sample.values[order] + noise)
        reps.extend([j] * l)
        sources.extend(order.tolist())
        pcts.extend([p] * l)
    if curves:
        arr = np.vstack(curves)
    else:
        arr = np.empty((0, sample.m))
    return PeripheralSet(
        arr, np.array(reps, dtype=int), np.array(sources, dtype=int),
        np.array(pcts, dtype=float), tuple(draws),
    )


def build_peripheral_set(sample: FunctionalSample, cfg: TuningConfig, rng,
                         factor=None, l_values=None, _cache=None):
    """Collect peripheral curves over ``cfg.J`` replications.

    If every replication comes up empty, one more attempt is made on a
    fresh child stream before :class:`AllReplicationsEmpty` is raised.
    ``l_values`` pins the per-replication counts (testing hook).
    """
    cache = _cache or _DepthCache(sample)
    factor = _factor(sample, factor)
    pset = _build(sample, cfg, rng, factor, cache, l_values)
    if pset.L == 0:
        pset = _build(sample, cfg, rng.spawn(1)[0], factor, cache, l_values)
    if pset.L == 0:
        raise AllReplicationsEmpty(f"no peripheral curves after {cfg.J} replications, twice")
    return pset


def peripheral_ranks(sample, pset: PeripheralSet, cfg: TuningConfig, _cache=None):
    """``(L, K)`` matrix of ranks of each peripheral depth among the sample depths.

    The depth of a peripheral curve is taken against the sample without its
    source curve, with the bandwidth of the full sample. Rank 1 is the
    minimum; ties with sample depths place the peripheral curve after them.
    """
    if pset.L == 0:
        raise EmptyPeripheralSet("no peripheral curves to rank")
    cache = _cache or _DepthCache(sample)
    K = len(cfg.percentiles)
    ranks = np.empty((pset.L, K), dtype=np.int64)
    for src in np.unique(pset.source):
        rows = np.flatnonzero(pset.source == src)
        reduced = sample.subset(np.delete(np.arange(sample.n), src))
        for k, p in enumerate(cfg.percentiles):
            base = np.sort(cache.depths(p))
            d = depth_of(pset.curves[rows], reduced, cache.spec(p))
            ranks[rows, k] = 1 + np.searchsorted(base, d, side="right")
    return ranks


def select_percentile(sample: FunctionalSample, pset: PeripheralSet, cfg: TuningConfig,
                      rng, _cache=None):
    """Candidate percentile with the smallest rank sum; ties broken at random."""
    ranks = peripheral_ranks(sample, pset, cfg, _cache)
    sums = ranks.sum(axis=0)
    best = np.flatnonzero(sums == sums.min())
    pick = best[0] if best.size == 1 else best[rng.integers(best.size)]
    return cfg.percentiles[pick], dict(zip(cfg.percentiles, sums.tolist()))


def tune_percentile(sample: FunctionalSample, cfg: TuningConfig = TuningConfig(), rng=None,
                    factor=None):
    """Full tuning procedure; falls back to the 50% percentile if no peripheral curves appear."""
    if rng is None:
        rng = np.random.default_rng()
    if len(cfg.percentiles) == 1:
        return TuningResult(cfg.percentiles[0], {}, None)
    cache = _DepthCache(sample)
    try:
        pset = build_peripheral_set(sample, cfg, rng, factor=factor, _cache=cache)
    except AllReplicationsEmpty:
        return TuningResult(FALLBACK_PERCENTILE, {}, None, fallback=True)
    p, sums = select_percentile(sample, pset, cfg, rng, _cache=cache)
    return TuningResult(p, sums, pset)
