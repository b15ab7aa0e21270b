import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oulab as L
from conftest import random_hypoelliptic, well_conditioned_matrix
from oracles import nilpotent_expm, series_expm


class TestOperatorSpec:
    def test_valid_construction(self):
        spec = L.OperatorSpec(np.eye(2), np.zeros((2, 2)))
        assert spec.dim == 2
        assert not spec.Q.flags.writeable

    def test_rejects_asymmetric_q(self):
        with pytest.raises(L.InvalidOperatorError, match="not symmetric"):
            L.OperatorSpec([[1.0, 0.5], [0.0, 1.0]], np.zeros((2, 2)))

    def test_rejects_indefinite_q(self):
        with pytest.raises(L.InvalidOperatorError, match="non-negative"):
            L.OperatorSpec([[1.0, 0.0], [0.0, -1.0]], np.zeros((2, 2)))

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(L.InvalidOperatorError, match="differ"):
            L.OperatorSpec(np.eye(2), np.zeros((3, 3)))

    def test_near_symmetric_roundoff_accepted(self):
        Q = np.eye(2)
        Q[0, 1] = 1e-14
        Q[1, 0] = 0.0
        spec = L.OperatorSpec(Q, np.zeros((2, 2)))
        assert spec.dim == 2


class TestKalman:
    def test_identity_q_always_full_rank(self):
        rng = np.random.default_rng(0)
        rep = L.kalman_rank(L.OperatorSpec(np.eye(2), rng.standard_normal((2, 2))))
        assert rep.rank == 2 and rep.hypoelliptic

    def test_nilpotent_drift_identity_q(self, nilpotent3):
        rep = L.kalman_rank(nilpotent3)
        assert rep.hypoelliptic
        assert rep.controllability_matrix.shape == (3, 9)

    def test_degenerate_chain_is_hypoelliptic(self, kolmogorov2):
        rep = L.kalman_rank(kolmogorov2)
        assert rep.rank == 2 and rep.hypoelliptic

    def test_degenerate_static_is_not(self):
        rep = L.kalman_rank(L.OperatorSpec(np.diag([1.0, 0.0]), np.zeros((2, 2))))
        assert rep.rank == 1 and not rep.hypoelliptic

    def test_invalid_q_raises(self):
        spec = L.OperatorSpec(np.eye(2), np.zeros((2, 2)))
        object.__setattr__(spec, "Q", np.array([[1.0, 0.0], [0.0, -1.0]]))
        with pytest.raises(L.InvalidOperatorError):
            L.kalman_rank(spec)

    def test_conjugation_invariance(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            spec = random_hypoelliptic(rng, n)
            P = well_conditioned_matrix(rng, n)
            conj = L.conjugate_operator(spec, P)
            assert L.kalman_rank(conj).hypoelliptic == L.kalman_rank(spec).hypoelliptic


class TestSpectralBound:
    def test_nilpotent_critical(self):
        rep = L.spectral_bound(np.eye(3, k=1))
        assert rep.spectral_bound == 0.0
        assert rep.classification == "critical"

    def test_rotation_critical(self):
        h = 1.7
        rep = L.spectral_bound([[0.0, h], [-h, 0.0]])
        assert rep.classification == "critical"
        assert sorted(z.imag for z in rep.eigenvalues) == pytest.approx([-h, h])

    def test_mixed_unstable(self):
        rep = L.spectral_bound(np.diag([-1.0, 2.0]))
        assert rep.spectral_bound == 2.0
        assert rep.classification == "unstable"

    def test_stable(self):
        assert L.spectral_bound(np.diag([-1.0, -2.0])).classification == "strictly-stable"

    def test_similarity_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            A = rng.standard_normal((n, n))
            P = well_conditioned_matrix(rng, n)
            s1 = L.spectral_bound(A).spectral_bound
            s2 = L.spectral_bound(P @ A @ np.linalg.inv(P)).spectral_bound
            assert abs(s1 - s2) < 1e-9 * (1 + abs(s1))


class TestMatrixExp:
    def test_t_zero_identity(self):
        A = np.random.default_rng(1).standard_normal((4, 4))
        np.testing.assert_array_equal(L.matrix_exp(A, 0.0), np.eye(4))

    def test_nilpotent_closed_form(self, nilpotent3):
        # e^{tA} x = (x1 + t x2 + t^2 x3 / 2, x2 + t x3, x3)
        t = 1.7
        E = L.matrix_exp(nilpotent3.A, t)
        expected = np.array([[1, t, t * t / 2], [0, 1, t], [0, 0, 1]])
        np.testing.assert_allclose(E, expected, atol=1e-14)

    def test_rotation_against_series_oracle(self):
        h = 1.3
        A = np.array([[0.0, h], [-h, 0.0]])
        t = 0.9
        E = L.matrix_exp(A, t)
        c, s = np.cos(h * t), np.sin(h * t)
        np.testing.assert_allclose(E, [[c, s], [-s, c]], atol=1e-12)
        np.testing.assert_allclose(E, series_expm(A * t), atol=1e-12)

    def test_semigroup_law(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(1, 6))
            A = rng.standard_normal((n, n))
            nrm = np.linalg.norm(A, 2)
            if nrm > 2:
                A *= 2 / nrm
            s, t = rng.uniform(0, 2, 2)
            lhs = L.matrix_exp(A, s + t)
            rhs = L.matrix_exp(A, s) @ L.matrix_exp(A, t)
            assert np.linalg.norm(lhs - rhs, 2) <= 1e-10 * np.linalg.norm(lhs, 2)

    def test_nilpotent_polynomial_identity(self):
        rng = np.random.default_rng(5)
        for n in (2, 3, 4, 5):
            # random strictly upper triangular = nilpotent
            A = np.triu(rng.standard_normal((n, n)), 1)
            t = 1.3
            np.testing.assert_allclose(
                L.matrix_exp(A, t), nilpotent_expm(A, t), atol=1e-12
            )

    def test_overflow_raises_range_error(self):
        with pytest.raises(L.RangeOverflowError):
            L.matrix_exp([[1.0]], 1e4)

    @given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-3, max_value=3))
    @settings(max_examples=25, deadline=None)
    def test_scalar_matches_exp(self, a, t):
        np.testing.assert_allclose(L.matrix_exp([[a]], t)[0, 0], np.exp(a * t), rtol=1e-12)


class TestConjugateScale:
    def test_identity_is_noop(self, nilpotent3):
        out = L.conjugate_operator(nilpotent3, np.eye(3))
        np.testing.assert_array_equal(out.Q, nilpotent3.Q)
        np.testing.assert_array_equal(out.A, nilpotent3.A)

    def test_singular_p_rejected(self, nilpotent3):
        with pytest.raises(L.ArgumentError, match="ill-conditioned"):
            L.conjugate_operator(nilpotent3, np.zeros((3, 3)))

    def test_spectral_bound_preserved(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            n = int(rng.integers(2, 6))
            spec = random_hypoelliptic(rng, n)
            P = well_conditioned_matrix(rng, n)
            s1 = L.spectral_bound(spec.A).spectral_bound
            s2 = L.spectral_bound(L.conjugate_operator(spec, P).A).spectral_bound
            assert abs(s1 - s2) <= 1e-9 * (1 + abs(s1))

    def test_scale_diffusion(self, nilpotent3):
        out = L.scale_diffusion(nilpotent3, 0.5)
        np.testing.assert_allclose(out.Q, 0.5 * np.eye(3))
        np.testing.assert_array_equal(out.A, nilpotent3.A)
        assert L.kalman_rank(out).hypoelliptic

    @given(st.floats(max_value=0.0, allow_nan=False))
    @settings(max_examples=20, deadline=None)
    def test_scale_diffusion_rejects_nonpositive(self, delta):
        spec = L.OperatorSpec(np.eye(2), np.zeros((2, 2)))
        with pytest.raises(L.ArgumentError):
            L.scale_diffusion(spec, delta)

    def test_diffusion_rescaling_identity(self, nilpotent3):
        # u harmonic for (Q, A)  <=>  v(y) = u(y / sqrt(delta)) harmonic for (delta Q, A)
        delta = 0.37
        scaled = L.scale_diffusion(nilpotent3, delta)
        u = L.affine_candidate([0.0, 0.0, 1.0])
        root = np.sqrt(delta)

        def ev(y):
            return u.evaluate(np.asarray(y) / root)

        def gr(y):
            return u.gradient(np.asarray(y) / root) / root

        def he(y):
            return u.hessian(np.asarray(y) / root) / delta

        v = L.HarmonicCandidate("rescaled", ev, gr, he, u.growth, u.non_negative, 3)
        pts = L.probe_grid(3)
        rep = L.residual(scaled, v, pts)
        assert rep.verdict == "pass"

    def test_conjugation_preserves_harmonicity(self, nilpotent3):
        rng = np.random.default_rng(23)
        P = well_conditioned_matrix(rng, 3)
        conj = L.conjugate_operator(nilpotent3, P)
        u = L.affine_candidate([0.0, 0.0, 1.0])
        Pinv = np.linalg.inv(P)

        def ev(y):
            return u.evaluate(np.asarray(y) @ Pinv.T)

        def gr(y):
            return u.gradient(np.asarray(y) @ Pinv.T) @ Pinv

        def he(y):
            return np.einsum("ki,...ij,jl->...kl", Pinv.T, u.hessian(np.asarray(y) @ Pinv.T), Pinv)

        v = L.HarmonicCandidate("conjugated", ev, gr, he, u.growth, u.non_negative, 3)
        rep = L.residual(conj, v, L.probe_grid(3))
        assert rep.verdict == "pass"


class TestGrowthCertificate:
    def test_sublinear_needs_delta(self):
        with pytest.raises(L.ArgumentError):
            L.GrowthCertificate("sublinear", c0=1.0, delta=1.0)
        cert = L.GrowthCertificate("sublinear", c0=2.0, delta=0.5)
        assert cert.delta == 0.5

    def test_exponential_needs_positive_c0(self):
        with pytest.raises(L.ArgumentError):
            L.GrowthCertificate("exponential", c0=0.0)

    def test_unknown_kind(self):
        with pytest.raises(L.ArgumentError):
            L.GrowthCertificate("polynomial")
