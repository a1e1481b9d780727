"""Mixture models MM1-MM6 for contaminated functional samples.

Each curve is an outlier with probability ``alpha``. Normal curves are

* MM1-MM3: ``4 s + eps(s)`` on [0, 1], ``eps`` a zero-mean Gaussian process
  with covariance ``0.25 exp(-(s - s')^2)``;
* MM4-MM6: ``u1 sin s + u2 cos s`` on [0, 2 pi], ``u1, u2 ~ U(0.05, 0.15)``.

Outliers:

* MM1 ``8 s - 2 + eps``;  MM2 normal + N(0, 1) noise;  MM3 ``4 exp(s) + eps``;
* MM4 ``u2`` replaced by ``u3 ~ U(0.15, 0.17)``;  MM5 normal + N(0, 0.05^2)
  noise;  MM6 ``u1 sin s + exp(0.69 s / 2 pi) u4 cos s``, ``u4 ~ U(0.1, 0.15)``.

For MM2 and MM5 the added Gaussian term is independent at every grid point
by default (``noise="pointwise"``); ``noise="shift"`` adds one scalar per
curve instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import KFSDError
from .fdata import LABEL_NORMAL, LABEL_OUTLIER, FunctionalSample, Grid
from .resample import GaussianFactor, rng_stream

MODELS = ("MM1", "MM2", "MM3", "MM4", "MM5", "MM6")
GRID_POINTS = 51
NOISE_MODES = ("pointwise", "shift")


def model_grid(model, m=GRID_POINTS):
    if model in ("MM1", "MM2", "MM3"):
        return Grid.linspace(0.0, 1.0, m)
    return Grid.linspace(0.0, 2.0 * math.pi, m)


@dataclass(frozen=True)
class MixtureModelSpec:
    model: str
    alpha: float
    n: int = 50
    m: int = GRID_POINTS
    noise: str = "pointwise"

    def __post_init__(self):
        model = self.model.upper()
        if model not in MODELS:
            raise KFSDError(f"unknown model {self.model!r}; choose from {MODELS}")
        object.__setattr__(self, "model", model)
        if not 0 <= self.alpha <= 1:
            raise KFSDError("alpha must lie in [0, 1]")
        if self.n < 1:
            raise KFSDError("n must be at least 1")
        if self.noise not in NOISE_MODES:
            raise KFSDError(f"noise must be one of {NOISE_MODES}")

    @property
    def grid(self):
        return model_grid(self.model, self.m)

    @property
    def index(self):
        return MODELS.index(self.model) + 1


@dataclass(frozen=True, eq=False)
class LabeledSample:
    sample: FunctionalSample
    is_outlier: np.ndarray

    @property
    def n_out(self):
        return int(self.is_outlier.sum())

    @property
    def values(self):
        return self.sample.values


def eps_covariance(grid: Grid):
    s = grid.points
    return 0.25 * np.exp(-np.subtract.outer(s, s) ** 2)


@lru_cache(maxsize=8)
def _eps_factor(grid: Grid):
    return GaussianFactor(eps_covariance(grid))


def gen_eps(grid: Grid, rng, size=None):
    """Draw(s) of the Gaussian process ``eps`` on ``grid``."""
    return _eps_factor(grid).draw(rng, size=size)


def _added_noise(rng, k, m, sd, mode):
    if mode == "shift":
        return sd * rng.standard_normal((k, 1)) * np.ones((1, m))
    return sd * rng.standard_normal((k, m))


def gen_dataset(spec: MixtureModelSpec, rng) -> LabeledSample:
    grid = spec.grid
    s = grid.points
    n, m = spec.n, grid.m
    out = rng.random(n) < spec.alpha
    k = int(out.sum())
    if spec.model in ("MM1", "MM2", "MM3"):
        eps = gen_eps(grid, rng, size=n)
        Y = 4.0 * s + eps
        if spec.model == "MM1":
            Y[out] = 8.0 * s - 2.0 + eps[out]
        elif spec.model == "MM2":
            Y[out] += _added_noise(rng, k, m, 1.0, spec.noise)
        else:
            Y[out] = 4.0 * np.exp(s) + eps[out]
    else:
        u1 = rng.uniform(0.05, 0.15, size=(n, 1))
        u2 = rng.uniform(0.05, 0.15, size=(n, 1))
        Y = u1 * np.sin(s) + u2 * np.cos(s)
        if spec.model == "MM4":
            u3 = rng.uniform(0.15, 0.17, size=(k, 1))
            Y[out] = u1[out] * np.sin(s) + u3 * np.cos(s)
        elif spec.model == "MM5":
            Y[out] += _added_noise(rng, k, m, 0.1 / 2.0, spec.noise)
        else:
            u4 = rng.uniform(0.1, 0.15, size=(k, 1))
            Y[out] = u1[out] * np.sin(s) + np.exp(0.69 * s / (2.0 * math.pi)) * u4 * np.cos(s)
    labels = tuple(LABEL_OUTLIER if o else LABEL_NORMAL for o in out)
    return LabeledSample(FunctionalSample(Y, grid, labels), out)


def alpha_key(alpha):
    return int(round(alpha * 10000))


def replication_rng(master_seed, model, alpha, r):
    """Stream owning replication ``r`` of ``(model, alpha)``."""
    idx = MODELS.index(model.upper()) + 1
    return rng_stream(master_seed, idx, alpha_key(alpha), r)


def gen_replication(model, alpha, r, master_seed, n=50, noise="pointwise"):
    spec = MixtureModelSpec(model, alpha, n=n, noise=noise)
    return gen_dataset(spec, replication_rng(master_seed, spec.model, alpha, r))


def gen_study_inputs(model, alpha, R, master_seed, n=50, noise="pointwise"):
    """``R`` independent datasets, replication ``r`` drawn from its own stream."""
    if R < 1:
        raise KFSDError("R must be at least 1")
    return [gen_replication(model, alpha, r, master_seed, n, noise) for r in range(R)]
