import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kfsd.depths import (
    DEPTH_IDS,
    DepthSpec,
    KernelConfig,
    ProjectionSet,
    depth_all,
    depth_of,
    fmd,
    fsd,
    gaussian_kernel,
    hmd,
    idd,
    kfsd,
    mbd,
    rtd,
)
from kfsd.errors import (
    DegenerateSample,
    NonPositiveBandwidth,
    NonPositiveSigma,
    NumericalBreakdown,
)
from kfsd.fdata import Curve, FunctionalSample, Grid, distance_percentile

G = Grid.linspace(0, 1, 11)


def const(levels, grid=G):
    return FunctionalSample(np.outer(levels, np.ones(grid.m)), grid)


def cc(level, grid=G):
    return Curve(np.full(grid.m, float(level)), grid)


def random_sample(seed, n=12, m=9):
    rng = np.random.default_rng(seed)
    grid = Grid.linspace(0, 1, m)
    return FunctionalSample(rng.normal(size=(n, m)) + np.sin(3 * grid.points), grid)


class TestGaussianKernel:
    def test_values(self):
        assert gaussian_kernel(cc(0), cc(0), 1.0) == 1.0
        assert gaussian_kernel(cc(0), cc(1), 1.0) == pytest.approx(math.exp(-1))
        assert gaussian_kernel(cc(0), cc(2), 1.0) == pytest.approx(math.exp(-4))

    def test_sigma_must_be_positive(self):
        with pytest.raises(NonPositiveSigma):
            KernelConfig("gaussian", 0.0)


class TestFSD:
    def test_single_distinct_curve(self):
        assert fsd(cc(0), const([1.0])) == pytest.approx(0.0)

    def test_opposite_units_cancel(self):
        assert fsd(cc(0), const([-1.0, 1.0])) == pytest.approx(1.0)

    def test_three_constants(self):
        # units +1 from 0 and -1 from 3; the coincident curve is skipped
        assert fsd(cc(1), const([0.0, 1.0, 3.0])) == pytest.approx(1.0)
        # x = 0.5: units from 0 (+1), 1 (-1), 3 (-1): |sum| = 1 over 3
        assert fsd(cc(0.5), const([0.0, 1.0, 3.0])) == pytest.approx(2 / 3)

    def test_all_coincident(self):
        with pytest.raises(DegenerateSample):
            fsd(cc(1), const([1.0, 1.0]))


class TestKFSD:
    def test_single_distinct_curve(self):
        assert kfsd(cc(0), const([1.0]), KernelConfig("gaussian", 1.0)) == pytest.approx(0.0)

    def test_symmetric_pair_closed_form(self):
        e1, e4 = math.exp(-1), math.exp(-4)
        expected = 1 - 0.5 * math.sqrt(2 + 2 * (1 + e4 - 2 * e1) / (2 - 2 * e1))
        got = kfsd(cc(0), const([-1.0, 1.0]), KernelConfig("gaussian", 1.0))
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.2179, abs=5e-5)

    def test_batch_matches_double_sum(self):
        s = random_sample(0)
        spec = DepthSpec("KFSD", percentile=30).resolve(s)
        batch = depth_all(s, spec).values
        k = KernelConfig("gaussian", spec.bandwidth)
        loop = [kfsd(s.curve(i), s, k) for i in range(s.n)]
        assert np.allclose(batch, loop, atol=1e-12)

    def test_query_batch_matches_double_sum(self):
        s = random_sample(1)
        q = random_sample(2, n=4)
        spec = DepthSpec("KFSD", bandwidth=1.3)
        batch = depth_of(q.values, s, spec)
        loop = [kfsd(q.curve(i), s, KernelConfig("gaussian", 1.3)) for i in range(4)]
        assert np.allclose(batch, loop, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_linear_kernel_equals_fsd(self, seed):
        s = random_sample(seed, n=8, m=7)
        lin = KernelConfig("linear")
        for i in range(s.n):
            x = s.curve(i)
            assert kfsd(x, s, lin) == pytest.approx(fsd(x, s), abs=1e-9)
        a = depth_all(s, "KFSD", kernel="linear").values
        b = depth_all(s, "FSD").values
        assert np.allclose(a, b, atol=1e-9)

    def test_near_duplicate_breaks_down(self):
        s = const([0.0, 1e-9, 5.0])
        with pytest.raises(NumericalBreakdown):
            kfsd(cc(0), s, KernelConfig("gaussian", 1e6))
        with pytest.raises(NumericalBreakdown):
            depth_of(cc(0).values, s, DepthSpec("KFSD", bandwidth=1e6))

    def test_identical_sample_is_degenerate(self):
        with pytest.raises(DegenerateSample):
            depth_all(const([2.0, 2.0, 2.0]), "KFSD")

    def test_middle_of_nested_constants_is_deepest(self):
        d = depth_all(const([0.0, 1.0, 2.0]), "KFSD").values
        assert np.argmax(d) == 1

    def test_translation_invariance(self):
        s = random_sample(3)
        shift = 5 * np.cos(4 * s.grid.points)
        spec = DepthSpec("KFSD", percentile=50)
        a = depth_all(s, spec).values
        b = depth_all(FunctionalSample(s.values + shift, s.grid), spec).values
        assert np.allclose(a, b, atol=1e-12, rtol=0)

    @pytest.mark.parametrize("c", [1e-3, 0.5, 7.0, 1e4])
    def test_scale_invariance(self, c):
        s = random_sample(4)
        spec = DepthSpec("KFSD", percentile=40)
        a = depth_all(s, spec).values
        b = depth_all(FunctionalSample(c * s.values, s.grid), spec).values
        assert np.allclose(a, b, atol=1e-9, rtol=0)


class TestHMD:
    def test_single_coincident(self):
        assert hmd(cc(0), const([0.0]), 0.7) == pytest.approx(2 / math.sqrt(2 * math.pi))
        assert hmd(cc(0), const([0.0]), 0.7) == pytest.approx(0.797885, abs=1e-6)

    def test_far_away(self):
        assert hmd(cc(1e6), const([0.0, 1.0]), 1.0) == pytest.approx(0.0)

    def test_two_distances(self):
        got = hmd(cc(0), const([1.0, 2.0]), 1.0)
        assert got == pytest.approx(0.7978845608 * (math.exp(-0.5) + math.exp(-2)))

    def test_bandwidth_positive(self):
        with pytest.raises(NonPositiveBandwidth):
            hmd(cc(0), const([1.0]), 0.0)

    def test_default_percentile(self):
        s = random_sample(5)
        spec = DepthSpec("HMD").resolve(s)
        assert spec.percentile == 15
        assert spec.bandwidth == distance_percentile(s, 15)


class TestFMD:
    def test_single_curve(self):
        assert fmd(cc(0), const([0.0])) == pytest.approx(0.5)

    def test_top_curve(self):
        assert fmd(cc(3), const([0.0, 1.0, 3.0])) == pytest.approx(0.5)

    def test_median_is_deepest(self):
        rng = np.random.default_rng(6)
        s = FunctionalSample(rng.normal(size=(7, 5)), Grid.linspace(0, 1, 5))
        med = np.median(s.values, axis=0)
        d_med = fmd(Curve(med, s.grid), s)
        assert d_med >= depth_all(s, "FMD").values.max() - 1e-12


class TestMBD:
    def test_inside_all_bands(self):
        assert mbd(cc(1), const([0.0, 1.0, 2.0])) == pytest.approx(1.0)

    def test_lowest(self):
        assert mbd(cc(0), const([0.0, 1.0, 2.0])) == pytest.approx(2 / 3)


class TestProjectionDepths:
    def test_unit_norms(self):
        P = ProjectionSet.draw(G, 50, seed=3)
        norms = np.sqrt(P.directions**2 @ G.weights)
        assert np.allclose(norms, 1.0, atol=1e-12)

    def test_rtd_single_point(self):
        P = ProjectionSet.draw(G, 10, seed=0)
        assert rtd(cc(2), const([2.0]), P) == pytest.approx(1.0)

    def test_rtd_outside_and_extreme(self):
        P = ProjectionSet.draw(G, 10, seed=0)
        s = const([0.0, 1.0, 2.0, 3.0])
        assert rtd(cc(10), s, P) == 0.0
        assert rtd(cc(3), s, P) == pytest.approx(0.25)

    def test_idd_symmetric_n4(self):
        P = ProjectionSet.draw(G, 10, seed=0)
        assert idd(cc(0), const([-3.0, -1.0, 1.0, 3.0]), P) == pytest.approx(2 / 3)

    def test_idd_outside(self):
        P = ProjectionSet.draw(G, 10, seed=0)
        assert idd(cc(9), const([-3.0, -1.0, 1.0, 3.0]), P) == 0.0

    def test_idd_needs_two_curves(self):
        P = ProjectionSet.draw(G, 3, seed=0)
        with pytest.raises(DegenerateSample):
            idd(cc(0), const([1.0]), P)

    def test_single_direction_average(self):
        s = random_sample(7, m=11)
        s = FunctionalSample(s.values, G)
        P = ProjectionSet.draw(G, 5, seed=1)
        full = idd(s.curve(0), s, P)
        singles = [idd(s.curve(0), s, ProjectionSet(P.directions[r], G)) for r in range(5)]
        assert full == pytest.approx(np.mean(singles))

    def test_rtd_shift_invariant(self):
        s = random_sample(8, m=11)
        s = FunctionalSample(s.values, G)
        spec = DepthSpec("RTD", projection_seed=2)
        a = depth_all(s, spec).values
        b = depth_all(FunctionalSample(s.values + 4.0, G), spec).values
        assert np.array_equal(a, b)


@pytest.mark.parametrize("depth_id", DEPTH_IDS)
def test_permutation_equivariance(depth_id):
    s = random_sample(9)
    perm = np.random.default_rng(0).permutation(s.n)
    spec = DepthSpec(depth_id, projection_seed=4)
    a = depth_all(s, spec).values
    b = depth_all(FunctionalSample(s.values[perm], s.grid), spec).values
    assert np.allclose(a[perm], b, atol=1e-12)


@pytest.mark.parametrize("depth_id", DEPTH_IDS)
def test_scores_csv(depth_id):
    scores = depth_all(random_sample(10, n=5), depth_id)
    lines = scores.to_csv().splitlines()
    assert lines[0] == "curve_index,depth"
    assert len(lines) == 6


@settings(max_examples=60, deadline=None)
@given(
    st.integers(2, 15),
    st.integers(2, 12),
    st.integers(0, 2**32 - 1),
    st.sampled_from([1e-3, 1.0, 1e3]),
)
def test_depths_within_unit_interval(n, m, seed, scale):
    rng = np.random.default_rng(seed)
    grid = Grid.linspace(0, 1, m)
    s = FunctionalSample(scale * rng.normal(size=(n, m)), grid)
    x = scale * rng.normal(size=(3, m))
    for depth_id in ("KFSD", "FSD", "MBD", "RTD", "FMD", "IDD"):
        v = depth_of(x, s, DepthSpec(depth_id, projection_seed=1))
        assert np.all(np.isfinite(v))
        assert np.all((v >= 0) & (v <= 1))
    assert np.all(depth_of(x, s, DepthSpec("HMD")) >= 0)
