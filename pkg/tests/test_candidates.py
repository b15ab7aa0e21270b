import math

import numpy as np
import pytest

import oulab as L
from oulab.sampling import probe_grid


class TestBuilders:
    def test_constant(self):
        u = L.constant_candidate(2.0, 3)
        pts = probe_grid(3)
        np.testing.assert_array_equal(u.evaluate(pts), np.full(len(pts), 2.0))
        np.testing.assert_array_equal(u.gradient(pts), np.zeros((len(pts), 3)))
        assert u.growth.kind == "bounded" and u.non_negative

    def test_affine(self):
        b = np.array([1.0, -2.0])
        u = L.affine_candidate(b)
        pts = np.array([[1.0, 1.0], [0.0, 3.0]])
        np.testing.assert_allclose(u.evaluate(pts), [-1.0, -6.0])
        np.testing.assert_allclose(u.gradient(pts), [b, b])
        assert u.growth.kind == "exponential"
        assert not u.non_negative

    def test_quadratic(self):
        M = np.array([[1.0, 0.2], [0.2, 2.0]])
        u = L.quadratic_candidate(M)
        x = np.array([[0.5, -1.0]])
        assert u.evaluate(x)[0] == pytest.approx(float(x[0] @ M @ x[0]))
        np.testing.assert_allclose(u.gradient(x)[0], 2 * M @ x[0])
        np.testing.assert_allclose(u.hessian(x)[0], 2 * M)
        assert u.non_negative  # M is positive definite

    def test_indefinite_quadratic_flagged(self):
        u = L.quadratic_candidate(np.diag([1.0, -1.0]))
        assert not u.non_negative


class TestCounterexample1D:
    def test_ode_residual_vanishes_on_grid(self):
        # (q/2) u'' + a x u' = 0 exactly: u' = e^{-a x^2 / q}
        u = L.counterexample_1d(1.0, 1.0)
        spec = L.OperatorSpec([[1.0]], [[1.0]])
        grid = np.linspace(-5, 5, 101)[:, None]
        rep = L.residual(spec, u, grid)
        assert rep.verdict == "pass"
        assert rep.statistic <= 1e-12

    def test_range_is_sqrt_pi(self):
        u = L.counterexample_1d(1.0, 1.0)
        big = np.array([[40.0], [-40.0]])
        vals = u.evaluate(big)
        assert vals[0] - vals[1] == pytest.approx(math.sqrt(math.pi), abs=1e-10)

    def test_center_value(self):
        u = L.counterexample_1d(1.0, 1.0)
        assert u.evaluate(np.array([[0.0]]))[0] == pytest.approx(math.sqrt(math.pi) / 2, abs=1e-14)

    def test_bounded_positive(self):
        for a, q in ((1.0, 1.0), (2.0, 1.0), (1.0, 3.0)):
            u = L.counterexample_1d(a, q)
            sup = math.sqrt(math.pi * q / a)
            # strictly inside the bounds where erf has not saturated in floats
            xs = np.linspace(-4, 4, 81)[:, None]
            vals = u.evaluate(xs)
            assert np.all(vals > 0) and np.all(vals < sup)
            # saturated tails still respect the closed bounds
            far = u.evaluate(np.array([[-30.0], [30.0]]))
            assert far[0] >= 0.0 and far[1] <= sup
            assert u.growth.kind == "bounded" and u.non_negative

    def test_lifted_direction(self):
        # u(<b, x>) with A^T b = a b and b^T Q b = q stays harmonic
        b = np.array([1.0, 0.0])
        A = np.diag([1.5, -1.0])
        Q = np.eye(2)
        u = L.counterexample_1d(1.5, 1.0, direction=b)
        spec = L.OperatorSpec(Q, A)
        rep = L.residual(spec, u, probe_grid(2))
        assert rep.verdict == "pass"

    def test_rejects_bad_parameters(self):
        with pytest.raises(L.ArgumentError):
            L.counterexample_1d(0.0, 1.0)
        with pytest.raises(L.ArgumentError):
            L.counterexample_1d(1.0, -1.0)


class TestSelfCheck:
    def test_gradient_consistency_catalog(self, nilpotent3):
        dec = L.jordan_real_form(nilpotent3.A)
        pts = probe_grid(3, per_radius=17)
        for cand in L.harmonic_catalog(nilpotent3, dec):
            rep = L.self_check(cand, pts)
            assert rep.verdict == "pass", (cand.name, rep.to_dict())

    def test_wrong_gradient_caught(self):
        good = L.affine_candidate([1.0, 0.0])
        bad = L.HarmonicCandidate(
            "broken", good.evaluate,
            lambda x: 2.0 * np.atleast_2d(good.gradient(x)),
            good.hessian, good.growth, good.non_negative, 2,
        )
        rep = L.self_check(bad, probe_grid(2))
        assert rep.verdict == "fail"

    def test_undeclared_negativity_caught(self):
        u = L.affine_candidate([1.0])
        lying = L.HarmonicCandidate(
            "liar", u.evaluate, u.gradient, u.hessian, u.growth, True, 1
        )
        rep = L.self_check(lying, probe_grid(1))
        assert rep.verdict == "fail"
        assert rep.witnesses[0]["kind"] == "negative-value"
