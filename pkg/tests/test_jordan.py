import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oulab as L
from conftest import block_multiset, make_taxonomy_matrix, well_conditioned_matrix
from oulab.jordan import (
    NILPOTENT,
    PURE_ROTATION,
    ROTATION_NILPOTENT,
    STABLE,
    ZERO_SIMPLE,
    JordanBlock,
)


class TestJordanRealForm:
    def test_nilpotent_already_canonical(self, nilpotent3):
        dec = L.jordan_real_form(nilpotent3.A)
        assert [b.kind for b in dec.blocks] == [NILPOTENT]
        assert dec.blocks[0].k == 3
        np.testing.assert_array_equal(dec.P, np.eye(3))

    def test_stable_diagonal(self):
        dec = L.jordan_real_form(np.diag([-1.0, -2.0]))
        assert [b.kind for b in dec.blocks] == [STABLE]
        np.testing.assert_array_equal(dec.P, np.eye(2))

    def test_pure_rotation(self):
        h = 2.0
        dec = L.jordan_real_form(np.array([[0.0, h], [-h, 0.0]]))
        assert [b.kind for b in dec.blocks] == [PURE_ROTATION]
        assert dec.blocks[0].h == pytest.approx(h, abs=1e-12)

    def test_zero_matrix(self):
        dec = L.jordan_real_form(np.zeros((3, 3)))
        assert [b.kind for b in dec.blocks] == [ZERO_SIMPLE]
        assert dec.blocks[0].size == 3

    def test_unstable_flagged(self):
        dec = L.jordan_real_form(np.diag([1.0, -1.0]))
        assert dec.unstable and dec.blocks == ()
        np.testing.assert_array_equal(dec.J, np.diag([1.0, -1.0]))

    def test_block_order_canonical(self):
        rng = np.random.default_rng(3)
        A0 = np.zeros((8, 8))
        A0[:1, :1] = -2.0                      # stable
        A0[1:3, 1:3] = [[0, 1.5], [-1.5, 0]]   # pure rotation
        A0[3:4, 3:4] = 0.0                     # zero simple
        A0[4:6, 4:6] = np.eye(2, k=1)          # J(0,2)
        A0[6:8, 6:8] = np.eye(2, k=1)          # J(0,2)
        P0 = well_conditioned_matrix(rng, 8)
        dec = L.jordan_real_form(P0 @ A0 @ np.linalg.inv(P0))
        kinds = [b.kind for b in dec.blocks]
        assert kinds == [STABLE, ZERO_SIMPLE, NILPOTENT, NILPOTENT, PURE_ROTATION]
        assert [b.offset for b in dec.blocks] == [0, 1, 2, 4, 6]

    def test_defective_scatter_recovered(self):
        # eigenvalues of a conjugated J(0,4) scatter ~1e-4; the adaptive
        # clustering must still recover a single chain of length 4
        rng = np.random.default_rng(17)
        P0 = well_conditioned_matrix(rng, 4)
        A = P0 @ np.eye(4, k=1) @ np.linalg.inv(P0)
        scatter = np.max(np.abs(np.linalg.eigvals(A)))
        assert scatter > 1e-6  # the point of the test
        dec = L.jordan_real_form(A)
        assert [(b.kind, b.k) for b in dec.blocks] == [(NILPOTENT, 4)]
        assert dec.residual <= 1e-8

    def test_roundtrip_suite(self):
        ok = 0
        for trial in range(100):
            rng = np.random.default_rng(5000 + trial)
            A, expected = make_taxonomy_matrix(rng)
            dec = L.jordan_real_form(A)
            assert not dec.unstable
            err = np.linalg.norm(dec.P @ dec.J @ dec.Pinv - A, "fro")
            assert err <= 1e-8 * np.linalg.norm(A, "fro")
            assert block_multiset(dec) == expected
            ok += 1
        assert ok == 100

    def test_reports_cluster_diagnostics(self, nilpotent3):
        dec = L.jordan_real_form(nilpotent3.A)
        assert dec.cluster_radius > 0
        assert dec.residual <= 1e-8


class TestBlockExponential:
    def test_identity_at_zero(self):
        blocks = [
            JordanBlock(NILPOTENT, 3, 0, k=3),
            JordanBlock(ROTATION_NILPOTENT, 4, 0, d=1.0, g=2),
            JordanBlock(PURE_ROTATION, 2, 0, h=2.0),
            JordanBlock(ZERO_SIMPLE, 2, 0),
            JordanBlock(STABLE, 2, 0, content=np.diag([-1.0, -2.0])),
        ]
        for b in blocks:
            np.testing.assert_allclose(L.block_exponential(b, 0.0), np.eye(b.size), atol=1e-15)

    def test_nilpotent_closed_form_t2(self):
        b = JordanBlock(NILPOTENT, 3, 0, k=3)
        np.testing.assert_allclose(
            L.block_exponential(b, 2.0), [[1, 2, 2], [0, 1, 2], [0, 0, 1]], atol=1e-14
        )

    def test_agrees_with_matrix_exp(self):
        blocks = [
            JordanBlock(NILPOTENT, 4, 0, k=4),
            JordanBlock(ROTATION_NILPOTENT, 4, 0, d=1.0, g=2),
            JordanBlock(ROTATION_NILPOTENT, 6, 0, d=0.7, g=3),
            JordanBlock(PURE_ROTATION, 2, 0, h=2.3),
            JordanBlock(STABLE, 3, 0, content=np.array([[-1.0, 0.4, 0.0], [0, -2.0, 1.0], [0, 0, -0.5]])),
        ]
        for b in blocks:
            M = b.matrix()
            for t in (0.1, 1.0, 10.0):
                err = np.max(np.abs(L.block_exponential(b, t) - L.matrix_exp(M, t)))
                assert err <= 1e-11 * max(1.0, np.linalg.norm(L.matrix_exp(M, t), 2)), (b.kind, t)

    def test_rotation_g2_quarter_turn(self):
        b = JordanBlock(ROTATION_NILPOTENT, 4, 0, d=1.0, g=2)
        E = L.block_exponential(b, np.pi / 2)
        np.testing.assert_allclose(E, L.matrix_exp(b.matrix(), np.pi / 2), atol=1e-12)

    def test_nilpotent_structure_kills_powers(self):
        # exp(tJ) - I is strictly upper triangular, so its k-th power is
        # exactly zero; check up to k = 5, t = 10
        for k in (2, 3, 4, 5):
            b = JordanBlock(NILPOTENT, k, 0, k=k)
            for t in (0.5, 10.0):
                M = L.block_exponential(b, t) - np.eye(k)
                Mk = np.linalg.matrix_power(M, k)
                assert np.linalg.norm(Mk, "fro") <= 1e-9


class TestResonanceTimes:
    def test_quarter_basic(self):
        times = L.resonance_times(np.pi / 2, "quarter", 0)
        assert times[0] == pytest.approx(1.0, abs=1e-15)

    def test_full_arithmetic(self):
        times = L.resonance_times(3.0, "full", 2)
        assert times[2] == pytest.approx(4 * np.pi / 3, rel=1e-15)

    def test_quarter_defining_property_large_n(self):
        for d in (0.7, np.pi / 2, 3.1):
            times = L.resonance_times(d, "quarter", 1000)
            assert np.max(np.abs(np.sin(d * times) - 1.0)) <= 1e-12

    def test_quarter_cosine_vanishes(self):
        for d in (0.7, 2.0):
            times = L.resonance_times(d, "quarter", 100)
            assert np.max(np.abs(np.cos(d * times))) <= 1e-12

    def test_zero_frequency_rejected(self):
        with pytest.raises(L.ArgumentError):
            L.resonance_times(0.0, "quarter", 3)

    @given(st.floats(min_value=0.01, max_value=50), st.integers(min_value=0, max_value=50))
    @settings(max_examples=50, deadline=None)
    def test_full_times_hit_multiples(self, d, n_max):
        times = L.resonance_times(d, "full", n_max)
        assert len(times) == n_max + 1
        k = np.round(d * times / (2 * np.pi))
        assert np.max(np.abs(d * times - 2 * np.pi * k)) <= 1e-9 * max(1, n_max)


class TestQuasiConstancy:
    def test_constant_passes(self, nilpotent3):
        dec = L.jordan_real_form(nilpotent3.A)
        rep = L.quasi_constancy_check(L.constant_candidate(2.0, 3), dec)
        assert rep.verdict == "pass"

    def test_last_variable_passes(self, nilpotent3):
        dec = L.jordan_real_form(nilpotent3.A)
        rep = L.quasi_constancy_check(L.affine_candidate([0, 0, 1.0]), dec)
        assert rep.verdict == "pass"

    def test_first_variable_fails_with_witness(self, nilpotent3):
        dec = L.jordan_real_form(nilpotent3.A)
        rep = L.quasi_constancy_check(L.affine_candidate([1.0, 0, 0]), dec)
        assert rep.verdict == "fail"
        assert rep.statistic == pytest.approx(1.0, rel=1e-9)
        assert rep.witnesses and rep.witnesses[0]["coordinate"] == 0

    def test_not_applicable_without_chain_blocks(self, skew2):
        dec = L.jordan_real_form(skew2.A)
        rep = L.quasi_constancy_check(L.constant_candidate(1.0, 2), dec)
        assert rep.verdict == "not-applicable"

    def test_rotation_chain_forbidden_coordinates(self):
        # J(0, d, 2): partials in the first 2g-2 = 2 coordinates must vanish
        d = 1.3
        R = np.array([[0.0, d], [-d, 0.0]])
        A = np.kron(np.eye(2), R) + np.kron(np.eye(2, k=1), np.eye(2))
        dec = L.jordan_real_form(A)
        assert [b.kind for b in dec.blocks] == [ROTATION_NILPOTENT]
        ok = L.quasi_constancy_check(L.affine_candidate([0, 0, 1.0, 0]), dec)
        bad = L.quasi_constancy_check(L.affine_candidate([0, 1.0, 0, 0]), dec)
        assert ok.verdict == "pass"
        assert bad.verdict == "fail"
