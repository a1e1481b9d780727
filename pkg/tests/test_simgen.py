import math

import numpy as np
import pytest

from kfsd.errors import KFSDError
from kfsd.resample import rng_stream
from kfsd.simgen import (
    MODELS,
    MixtureModelSpec,
    gen_dataset,
    gen_eps,
    gen_replication,
    gen_study_inputs,
    model_grid,
)


def test_grids():
    g = model_grid("MM1")
    assert g.m == 51 and g.points[-1] == 1.0
    assert model_grid("MM6").points[-1] == pytest.approx(2 * math.pi)


@pytest.fixture(scope="module")
def draws():
    return gen_eps(model_grid("MM1"), rng_stream(0), size=10_000)


class TestEps:
    def test_variance(self, draws):
        assert np.allclose(draws.var(axis=0), 0.25, rtol=0.05)

    def test_correlation(self, draws):
        s = model_grid("MM1").points
        corr = np.corrcoef(draws, rowvar=False)
        expect = np.exp(-np.subtract.outer(s, s) ** 2)
        assert np.max(np.abs(corr - expect)) < 0.05

    def test_mean(self, draws):
        se = 0.5 / math.sqrt(len(draws))
        assert np.all(np.abs(draws.mean(axis=0)) < 3.5 * se)


@pytest.mark.parametrize("model", MODELS)
def test_shapes_and_labels(model):
    data = gen_dataset(MixtureModelSpec(model, 0.2, n=30), rng_stream(1))
    assert data.values.shape == (30, 51)
    assert data.n_out == int(data.is_outlier.sum())
    assert list(data.sample.labels) == ["outlier" if o else "normal" for o in data.is_outlier]


@pytest.mark.parametrize("model", MODELS)
def test_no_contamination(model):
    assert gen_dataset(MixtureModelSpec(model, 0.0), rng_stream(2)).n_out == 0


def test_invalid_spec():
    with pytest.raises(KFSDError):
        MixtureModelSpec("MM7", 0.1)
    with pytest.raises(KFSDError):
        MixtureModelSpec("MM1", 1.5)


@pytest.mark.parametrize("model", ["MM1", "MM2", "MM3"])
def test_normal_mean(model):
    data = gen_dataset(MixtureModelSpec(model, 0.0, n=4000), rng_stream(3))
    s = data.sample.grid.points
    se = 0.5 / math.sqrt(4000)
    assert np.all(np.abs(data.values.mean(axis=0) - 4 * s) < 4 * se)


def test_mm1_outliers_cross_mid_domain():
    data = gen_dataset(MixtureModelSpec("MM1", 1.0, n=3000), rng_stream(4))
    mid = data.values[:, 25].mean()
    assert mid == pytest.approx(2.0, abs=0.05)
    assert data.values[:, 0].mean() == pytest.approx(-2.0, abs=0.05)


def test_mm2_pointwise_noise_is_rough():
    rough = gen_dataset(MixtureModelSpec("MM2", 1.0, n=200), rng_stream(5)).values
    shift = gen_dataset(MixtureModelSpec("MM2", 1.0, n=200, noise="shift"), rng_stream(5)).values
    assert np.diff(rough, axis=1).std() > 5 * np.diff(shift, axis=1).std()


def test_mm4_ranges():
    data = gen_dataset(MixtureModelSpec("MM4", 0.5, n=400), rng_stream(6))
    # value at s = 0 is the cosine coefficient
    u = data.values[:, 0]
    assert np.all((u[~data.is_outlier] >= 0.05) & (u[~data.is_outlier] <= 0.15))
    assert np.all((u[data.is_outlier] >= 0.15) & (u[data.is_outlier] <= 0.17))


def test_mm6_end_amplitude():
    assert math.exp(0.69) == pytest.approx(1.9937, abs=1e-4)
    data = gen_dataset(MixtureModelSpec("MM6", 1.0, n=200), rng_stream(7))
    ratio = data.values[:, -1] / data.values[:, 0]
    assert np.allclose(ratio, math.exp(0.69), rtol=1e-9)
    assert np.all((data.values[:, 0] >= 0.1) & (data.values[:, 0] <= 0.15))


def test_study_inputs():
    a = gen_study_inputs("MM1", 0.05, 100, master_seed=8)
    b = gen_study_inputs("MM1", 0.05, 100, master_seed=8)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
    total = sum(d.n_out for d in a)
    # Bin(5000, 0.05): mean 250, sd about 15.4
    assert abs(total - 250) < 4 * 15.4


def test_replication_streams_isolated():
    seq = gen_study_inputs("MM3", 0.1, 5, master_seed=9)
    assert np.array_equal(gen_replication("MM3", 0.1, 3, 9).values, seq[3].values)


def test_label_frequency():
    data = gen_dataset(MixtureModelSpec("MM5", 0.3, n=20000), rng_stream(10))
    assert abs(data.is_outlier.mean() - 0.3) < 4 * math.sqrt(0.3 * 0.7 / 20000)
