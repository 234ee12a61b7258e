import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fbm_pitman.errors import ParameterOutOfRange
from fbm_pitman.functionals import (
    LogLikelihoodField,
    absolute_moment,
    functionals_from,
    log_beta,
    log_likelihood_field,
    mle_argmax,
    outer_mass,
    path_functionals,
    pitman_estimate,
    posterior,
    shift_test_rhs,
)
from fbm_pitman.sampler import FbmPath, TimeGrid, plan_for_grid, sample_two_sided_path

THREE = TimeGrid(1.0, 3)


def field(values, grid=THREE, H=0.5):
    return LogLikelihoodField(grid, H, np.asarray(values, dtype=float))


@pytest.fixture
def worked():
    # nodes {-1, 0, 1}, weights {0.5, 1, 0.5}, log Z = {0, 0, ln 2}
    return field([0.0, 0.0, math.log(2.0)])


class TestLogLikelihood:
    def test_zero_path(self):
        grid = TimeGrid(2.0, 5)
        fld = log_likelihood_field(FbmPath(grid, 0.5, np.zeros(5)))
        assert fld.log_z[-1] == pytest.approx(-1.0)
        assert fld.log_z[grid.center] == 0.0
        fld3 = log_likelihood_field(FbmPath(THREE, 0.5, np.zeros(3)))
        assert list(fld3.log_z) == [-0.5, 0.0, -0.5]

    def test_origin_pinned_for_sampled_paths(self):
        grid = TimeGrid(50.0, 201)
        path = sample_two_sided_path(plan_for_grid(grid, 0.3), grid, np.random.default_rng(0), size=10)
        assert np.all(log_likelihood_field(path).log_z[:, grid.center] == 0.0)


class TestPosterior:
    def test_uniform(self):
        grid = TimeGrid(3.0, 31)
        post = posterior(field(np.full(31, 1.7), grid))
        assert np.allclose(post.q, 1 / 6.0)
        assert post.log_b0 == pytest.approx(math.log(6.0) + 1.7)

    def test_worked_example(self, worked):
        post = posterior(worked)
        # masses w * Z = {0.5, 1, 1} (sum 2.5), q = Z / 2.5
        assert np.allclose(post.q, [0.4, 0.4, 0.8], atol=1e-15)
        assert np.sum(THREE.weights * post.q) == pytest.approx(1.0, abs=1e-15)
        assert post.log_b0 == pytest.approx(math.log(2.5), abs=1e-15)

    def test_shift(self, worked):
        a, b = posterior(worked), posterior(worked.shifted(123.4))
        assert np.allclose(a.q, b.q, rtol=1e-12)
        assert b.log_b0 == pytest.approx(a.log_b0 + 123.4, rel=1e-14)

    def test_no_underflow_at_extreme_scale(self):
        post = posterior(field([-1e5, -2e5, -1e5 - 1]))
        assert np.isfinite(post.log_b0)
        assert np.sum(THREE.weights * post.q) == pytest.approx(1.0)


class TestEstimates:
    def test_pitman_uniform_is_zero(self):
        grid = TimeGrid(5.0, 101)
        assert pitman_estimate(posterior(field(np.zeros(101), grid))) == pytest.approx(0.0, abs=1e-15)

    def test_pitman_worked_example(self, worked):
        assert pitman_estimate(posterior(worked)) == pytest.approx(0.2, abs=1e-15)

    def test_pitman_reversal(self):
        grid = TimeGrid(5.0, 101)
        lz = np.random.default_rng(1).normal(size=101)
        a = pitman_estimate(posterior(field(lz, grid)))
        b = pitman_estimate(posterior(field(lz, grid).reversed()))
        assert b == pytest.approx(-a, rel=1e-12)

    def test_argmax(self, worked):
        grid = TimeGrid(4.0, 9)
        assert mle_argmax(log_likelihood_field(FbmPath(grid, 0.6, np.zeros(9)))) == 0.0
        assert mle_argmax(worked) == 1.0
        assert mle_argmax(worked.reversed()) == -1.0

    def test_argmax_ties(self):
        assert mle_argmax(field([1.0, 0.0, 1.0])) == -1.0
        assert mle_argmax(field([1.0, 1.0, 1.0])) == 0.0
        grid = TimeGrid(2.0, 5)
        assert mle_argmax(field([3.0, 0.0, 0.0, 0.0, 3.0], grid)) == -2.0
        assert mle_argmax(field([3.0, 0.0, 0.0, 3.0, 3.0], grid)) == 1.0

    def test_absolute_moments(self, worked):
        post = posterior(worked)
        assert absolute_moment(post, 1) == pytest.approx(0.6, abs=1e-15)
        assert absolute_moment(post, 2) == pytest.approx(0.6, abs=1e-15)
        assert abs(pitman_estimate(post)) <= absolute_moment(post, 1)

    def test_uniform_second_moment(self):
        grid = TimeGrid(1.0, 2001)
        post = posterior(field(np.zeros(2001), grid))
        # trapezoid error on t^2 / 2 is Δ^2 / 6 over [-1, 1]
        assert absolute_moment(post, 2) == pytest.approx(1 / 3, abs=1e-6)

    def test_moment_order_guard(self, worked):
        with pytest.raises(ParameterOutOfRange):
            absolute_moment(posterior(worked), 0.5)


class TestLogBeta:
    def test_zero_m_matches_normaliser(self, worked):
        assert log_beta(worked, 0.0) == posterior(worked).log_b0

    def test_hand_value(self):
        flat = field([0.0, 0.0, 0.0])
        expected = math.log(0.5 * math.exp(-0.1) + 1 + 0.5 * math.exp(0.1))
        assert log_beta(flat, 0.1) == pytest.approx(expected, rel=1e-15)
        assert math.exp(expected) == pytest.approx(2.0050042, abs=1e-7)

    def test_palindromic_field_is_even(self):
        grid = TimeGrid(20.0, 201)
        half = np.random.default_rng(3).normal(size=101)
        lz = np.concatenate([half[:0:-1], half])
        fld = field(lz, grid)
        assert log_beta(fld, 0.07) == pytest.approx(log_beta(fld, -0.07), rel=1e-13)

    @pytest.mark.parametrize("m", [0.125, -0.2, 1.0])
    def test_domain(self, worked, m):
        with pytest.raises(ParameterOutOfRange):
            log_beta(worked, m)


class TestPathFunctionals:
    def test_zero_path(self):
        grid = TimeGrid(10.0, 201)
        f = path_functionals(FbmPath(grid, 0.5, np.zeros(201)), m_values=(-0.02, 0.0, 0.02))
        assert f.zeta == pytest.approx(0.0, abs=1e-14)
        assert f.xi == 0.0
        assert f.a_moments[2.0] > 0
        assert f.log_beta[0.02] == pytest.approx(f.log_beta[-0.02], rel=1e-13)

    def test_worked_example_bundle(self):
        path = FbmPath(THREE, 0.5, np.array([0.5, 0.0, 0.5 + math.log(2.0)]))
        f = path_functionals(path, m_values=(0.0,))
        assert f.zeta == pytest.approx(0.2, abs=1e-15)
        assert f.xi == 1.0
        assert f.a_moments[1.0] == pytest.approx(0.6)
        assert f.a_moments[2.0] == pytest.approx(0.6)
        assert f.log_b0 == pytest.approx(math.log(2.5))

    def test_deterministic(self):
        grid = TimeGrid(10.0, 201)
        path = sample_two_sided_path(plan_for_grid(grid, 0.6), grid, np.random.default_rng(3))
        a, b = path_functionals(path), path_functionals(path)
        assert a == b

    def test_consistent_with_separate_calls(self):
        grid = TimeGrid(10.0, 201)
        path = sample_two_sided_path(plan_for_grid(grid, 0.6), grid, np.random.default_rng(4))
        f = path_functionals(path, m_values=(-0.05, 0.0, 0.05))
        fld = log_likelihood_field(path)
        post = posterior(fld)
        assert f.zeta == pitman_estimate(post)
        assert f.xi == mle_argmax(fld)
        assert f.a_moments[4.0] == absolute_moment(post, 4)
        assert f.log_beta[0.05] == log_beta(fld, 0.05)

    def test_batched_matches_single(self):
        grid = TimeGrid(10.0, 201)
        batch = sample_two_sided_path(plan_for_grid(grid, 0.8), grid, np.random.default_rng(5), size=4)
        fb = path_functionals(batch)
        for i in range(4):
            fi = path_functionals(FbmPath(grid, 0.8, batch.values[i]))
            assert fb.zeta[i] == pytest.approx(fi.zeta, rel=1e-14, abs=1e-14)
            assert fb.xi[i] == fi.xi

    def test_m_guard(self):
        with pytest.raises(ParameterOutOfRange):
            path_functionals(FbmPath(THREE, 0.5, np.zeros(3)), m_values=(0.2,))


class TestShiftRhsAndMass:
    def test_constant_test_function(self):
        grid = TimeGrid(10.0, 101)
        post = posterior(field(np.random.default_rng(0).normal(size=101), grid))
        z = pitman_estimate(post)
        assert shift_test_rhs(post, z, np.ones_like) == pytest.approx(1.0, abs=1e-14)

    def test_uniform_cos_by_hand(self):
        post = posterior(field([0.0, 0.0, 0.0]))
        # q = 1/2 on {-1, 0, 1}, ζ = 0: RHS = 0.5*0.5*cos(1) + 0.5*cos(0) + 0.5*0.5*cos(-1)
        rhs = shift_test_rhs(post, 0.0, np.cos)
        assert rhs == pytest.approx(0.5 + 0.5 * math.cos(1.0), rel=1e-15)
        assert rhs != pytest.approx(math.cos(0.0))

    def test_outer_mass(self):
        grid = TimeGrid(10.0, 201)
        post = posterior(field(np.zeros(201), grid))
        # uniform density 1/20; nodes 9.6..10 carry weight 4 * 0.1 + 0.05 per side
        assert outer_mass(post) == pytest.approx(2 * 0.45 / 20.0, rel=1e-14)


fields = arrays(np.float64, 41, elements=st.floats(-30, 30))


class TestInvariants:
    grid = TimeGrid(4.0, 41)

    @settings(max_examples=200)
    @given(fields)
    def test_normalisation_and_holder(self, lz):
        post = posterior(field(lz, self.grid))
        assert np.all(post.q >= 0)
        assert np.sum(self.grid.weights * post.q) == pytest.approx(1.0, rel=1e-10)
        z = pitman_estimate(post)
        for p in (1.0, 2.0, 4.0):
            assert abs(z) ** p <= absolute_moment(post, p) * (1 + 1e-12) + 1e-300

    @settings(max_examples=200)
    @given(fields)
    def test_reversal(self, lz):
        fwd, rev = field(lz, self.grid), field(lz, self.grid).reversed()
        pf, pr = posterior(fwd), posterior(rev)
        assert pitman_estimate(pr) == pytest.approx(-pitman_estimate(pf), rel=1e-12, abs=1e-12)
        for p in (1.0, 2.0, 4.0):
            assert absolute_moment(pr, p) == pytest.approx(absolute_moment(pf, p), rel=1e-12)
        # strict maximum: reversal negates the argmax exactly
        if np.sum(lz == lz.max()) == 1:
            assert mle_argmax(rev) == -mle_argmax(fwd)

    @settings(max_examples=200)
    @given(fields, st.floats(-500, 500))
    def test_shift_invariance(self, lz, c):
        a, b = field(lz, self.grid), field(lz, self.grid).shifted(c)
        pa, pb = posterior(a), posterior(b)
        assert np.allclose(pa.q, pb.q, rtol=1e-12, atol=1e-300)
        assert pitman_estimate(pb) == pytest.approx(pitman_estimate(pa), rel=1e-12, abs=1e-12)
        levels = np.unique(lz)
        # adding c can round near-ties into exact ties, which the tie rule then resolves
        if levels.size == 1 or levels[-1] - levels[-2] > 1e-9 * (1 + abs(c)):
            assert mle_argmax(a) == mle_argmax(b)
        assert absolute_moment(pb, 2) == pytest.approx(absolute_moment(pa, 2), rel=1e-12)

    def test_sampled_paths(self):
        grid = TimeGrid(200.0, 4001)
        path = sample_two_sided_path(plan_for_grid(grid, 0.5), grid, np.random.default_rng(9), size=200)
        fld = log_likelihood_field(path)
        post = posterior(fld)
        f = functionals_from(fld, post, (1.0, 2.0, 4.0), (0.0,))
        assert np.allclose(np.sum(grid.weights * post.q, axis=-1), 1.0, rtol=1e-10)
        for p, a in f.a_moments.items():
            assert np.all(np.abs(f.zeta) ** p <= a * (1 + 1e-12))
        rev = path_functionals(path.reversed(), m_values=(0.0,))
        assert np.allclose(rev.zeta, -f.zeta, rtol=1e-12, atol=1e-12)
        assert np.allclose(rev.a_moments[2.0], f.a_moments[2.0], rtol=1e-12)

    def test_quadrature_refinement(self):
        # smooth non-decaying field: trapezoid error is O(Δ^2), so successive
        # differences shrink by about 4 as the spacing halves
        def zeta(n):
            grid = TimeGrid(2.0, n)
            t = grid.nodes
            return pitman_estimate(posterior(field(np.sin(t) + 0.3 * t**2, grid)))

        z1, z2, z3 = zeta(33), zeta(65), zeta(129)
        assert abs(z3 - z2) < 0.5 * abs(z2 - z1)
