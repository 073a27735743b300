import numpy as np
import pytest
import scipy.linalg

from equiflow.errors import IncompatibleSplitting, NotCommuting
from equiflow.harness import generators as gen
from equiflow.specflow import UnitaryPath, concatenate, reverse
from equiflow.winding import (
    canonical_path,
    double_index,
    fredholm_det_path,
    pick_offset,
    relative_double_index,
    winding_from_logs,
    winding_number,
)

W3 = np.exp(2j * np.pi / 3)
CHI = np.array([[W3]])


def scalar_path(f):
    return UnitaryPath(1, lambda t: np.array([[f(t)]], dtype=complex))


class TestWindingNumber:
    def test_scalar_loop(self):
        f = scalar_path(lambda t: np.exp(2j * np.pi * t))
        assert abs(winding_number(f, CHI) - W3) < 1e-12

    def test_constant_path(self):
        f = scalar_path(lambda t: np.exp(0.4j))
        assert winding_number(f, CHI) == 0

    def test_reversal(self):
        f = scalar_path(lambda t: np.exp(2j * np.pi * t))
        assert abs(winding_number(reverse(f), CHI) + W3) < 1e-12

    def test_additivity(self):
        f = scalar_path(lambda t: np.exp(2j * np.pi * t))
        g = scalar_path(lambda t: np.exp(2j * np.pi * t))
        v = winding_number(concatenate(f, g), CHI)
        assert abs(v - 2 * W3) < 1e-12

    def test_integer_for_trivial_actor(self):
        rng = gen.rng_for(21)
        f, _ = gen.commuting_unitary_path(3, 2, rng, windings=2)
        v = winding_number(f)
        assert abs(v.imag) < 1e-9 and abs(v.real - round(v.real)) < 1e-9

    def test_endpoint_at_minus_one_offset(self):
        # phase reaches pi exactly at t=1: the offset pushes the wall above it
        f = scalar_path(lambda t: np.exp(1j * np.pi * t))
        assert winding_number(f, CHI) == 0

    def test_homotopy_invariance(self):
        rng = gen.rng_for(22)
        f, a = gen.commuting_unitary_path(3, 3, rng, windings=1)
        from equiflow.spectra import eig_unitary
        es = eig_unitary(a)
        B = gen.rand_hermitian(3, gen.rng_for(23), 0.7)
        Bc = np.zeros_like(B)
        for idx in es.cluster_slices():
            Bc[np.ix_(idx, idx)] = (es.vectors.conj().T @ B @ es.vectors)[np.ix_(idx, idx)]
        B = es.vectors @ Bc @ es.vectors.conj().T

        def deformed(t):
            return np.asarray(f(t)) @ scipy.linalg.expm(1j * np.sin(np.pi * t) ** 2 * B)

        assert abs(winding_number(f, a) - winding_number(UnitaryPath(3, deformed), a)) <= 1e-8


class TestPickOffset:
    def test_zero_when_clear(self):
        assert pick_offset(np.array([0.3, -2.0])) == 0.0

    def test_positive_when_on_wall(self):
        th = pick_offset(np.array([np.pi, 0.1]))
        assert 0 < th < 1e-3


class TestFredholmDet:
    def test_scalar_loop(self):
        f = scalar_path(lambda t: np.exp(2j * np.pi * t))
        assert abs(fredholm_det_path(f, CHI) - np.exp(2j * np.pi * W3)) < 1e-8

    def test_constant(self):
        f = scalar_path(lambda t: np.exp(0.9j))
        assert abs(fredholm_det_path(f, CHI) - 1.0) < 1e-10

    def test_multiplicative(self):
        rng = gen.rng_for(24)
        f, a = gen.commuting_unitary_path(2, 3, rng, windings=0, amp=0.7)
        g, _ = gen.commuting_unitary_path(2, 3, gen.rng_for(25), windings=0, amp=0.7)
        # build g in the same commutant as a
        from equiflow.spectra import eig_unitary
        es = eig_unitary(a)
        H1 = gen.rand_hermitian(2, rng, 0.6)
        Hc = np.zeros_like(H1)
        for idx in es.cluster_slices():
            Hc[np.ix_(idx, idx)] = (es.vectors.conj().T @ H1 @ es.vectors)[np.ix_(idx, idx)]
        H1 = es.vectors @ Hc @ es.vectors.conj().T
        g = UnitaryPath(2, lambda t: scipy.linalg.expm(1j * t * H1))
        fg = UnitaryPath(2, lambda t: np.asarray(f(t)) @ np.asarray(g(t)))
        d = fredholm_det_path(fg, a)
        dd = fredholm_det_path(f, a) * fredholm_det_path(g, a)
        assert abs(d - dd) <= 1e-6 * max(abs(dd), 1.0)


class TestTraceLogFormula:
    def test_scalar(self):
        f = scalar_path(lambda t: np.exp(1j * t * (np.pi + 0.5)))
        assert abs(winding_from_logs(f, CHI) - winding_number(f, CHI)) < 1e-8

    def test_matrix(self):
        rng = gen.rng_for(26)
        f, a = gen.commuting_unitary_path(3, 4, rng, windings=1)
        assert abs(winding_from_logs(f, a) - winding_number(f, a)) < 1e-6


class TestCanonicalPath:
    def test_identity_source(self):
        a = np.diag([W3, 1.0])
        cc = canonical_path(np.eye(2), a)
        assert np.allclose(cc(0.0), np.eye(2))
        assert np.allclose(cc(1.0), a)

    def test_minus_one_scalar(self):
        cc = canonical_path(np.array([[-1.0 + 0j]]), CHI)
        for t in (0.0, 0.5, 1.0):
            assert np.isclose(cc(t)[0, 0], -W3)

    def test_blockwise(self):
        U = np.diag([-1.0 + 0j, np.exp(1j * np.pi / 2)])
        a = np.diag([W3, 1.0])
        cc = canonical_path(U, a)
        for t in (0.0, 0.3, 1.0):
            expect = np.diag([-W3, np.exp(1j * t * np.pi / 2)])
            assert np.allclose(cc(t), expect)

    def test_invariants(self):
        rng = gen.rng_for(27)
        U, a = gen.commuting_static_unitary(4, 3, rng)
        cc = canonical_path(U, a)
        # endpoints: f(0) = (-a|H0) + I, f(1) = (-a|H0) + a~ U~
        f0, f1 = cc(0.0), cc(1.0)
        B1 = cc.comp_basis
        assert np.allclose(B1.conj().T @ f0 @ B1, np.eye(B1.shape[1]), atol=1e-12)
        a1 = B1.conj().T @ a @ B1
        U1 = B1.conj().T @ U @ B1
        assert np.allclose(B1.conj().T @ f1 @ B1, a1 @ U1, atol=1e-10)

    def test_not_commuting(self):
        U = np.diag([1j, -1j])
        a = np.array([[0, 1], [1, 0]], dtype=complex)  # swaps the eigenvectors of U
        with pytest.raises(NotCommuting):
            canonical_path(U, a)


class TestDoubleIndex:
    def test_identity_left(self):
        rng = gen.rng_for(28)
        V, a = gen.commuting_static_unitary(3, 3, rng)
        assert abs(double_index(np.eye(3), V, a)) == 0

    def test_scalar_inverse_pair(self):
        th = 2.0
        U = np.array([[np.exp(1j * th)]])
        assert abs(double_index(U, U.conj().T)) == 0

    def test_worked_example(self):
        U = np.diag([-1.0 + 0j, np.exp(1j * np.pi / 2)])
        V = np.diag([-1.0 + 0j, np.exp(2j)])
        assert abs(double_index(U, V) + 1.0) < 1e-12

    def test_inverse_property_random(self):
        rng = gen.rng_for(29)
        for i in range(10):
            U, a = gen.commuting_static_unitary(3, 2 + i % 4, gen.rng_for(290 + i))
            tau = double_index(U, U.conj().T, a)
            # equals w(f) + w(g) with f, g the canonical paths of U and U^{-1};
            # both windings vanish, so tau must too
            assert abs(tau) <= 1e-8

    def test_incompatible_splitting(self):
        U = np.diag([-1.0 + 0j, 1j])
        V = np.diag([1.0 + 0j, 1j])  # does not restrict to -1 on ker(U + 1)
        with pytest.raises(IncompatibleSplitting):
            double_index(U, V)
        V2 = np.diag([-1.0 + 0j, -1.0 + 0j])  # extra -1 outside ker(U + 1)
        with pytest.raises(IncompatibleSplitting):
            double_index(U, V2)


class TestRelativeDoubleIndex:
    def test_constant_pair(self):
        f = scalar_path(lambda t: np.exp(0.3j))
        g = scalar_path(lambda t: np.exp(-0.8j))
        assert relative_double_index(f, g) == 0

    def test_half_turn_pair(self):
        f = scalar_path(lambda t: np.exp(1j * np.pi * t))
        assert abs(relative_double_index(f, f) + 1.0) < 1e-12

    def test_matches_double_index_on_canonical_paths(self):
        rng = gen.rng_for(30)
        U, _ = gen.commuting_static_unitary(3, 2, rng)
        V, _ = gen.commuting_static_unitary(3, 2, gen.rng_for(31))
        f = canonical_path(U).path
        g = canonical_path(V).path
        assert abs(relative_double_index(f, g) - double_index(U, V)) <= 1e-8

    def test_reversal_negates(self):
        rng = gen.rng_for(32)
        f, a = gen.commuting_unitary_path(2, 3, rng, windings=1)
        g, _ = gen.commuting_unitary_path(2, 3, gen.rng_for(33), windings=1)
        from equiflow.spectra import eig_unitary
        es = eig_unitary(a)
        H = gen.rand_hermitian(2, rng, 0.8)
        Hc = np.zeros_like(H)
        for idx in es.cluster_slices():
            Hc[np.ix_(idx, idx)] = (es.vectors.conj().T @ H @ es.vectors)[np.ix_(idx, idx)]
        H = es.vectors @ Hc @ es.vectors.conj().T
        g = UnitaryPath(2, lambda t: scipy.linalg.expm(2j * np.pi * t * H))
        v = relative_double_index(f, g, a)
        vr = relative_double_index(reverse(f), reverse(g), a)
        assert abs(v + vr) <= 1e-8
