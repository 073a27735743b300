import numpy as np
import pytest
from scipy.special import erf, erfc

from equiflow.errors import KernelPresent, NotEquivariant, NotPositive
from equiflow.eta_zeta import (
    eta,
    eta_form,
    eta_log_defect,
    fit_character_lattice,
    getzler_spectral_flow,
    heat_trace,
    mellin_eta,
    mellin_zeta,
    reduced_eta,
    truncated_eta,
    truncated_eta_quadrature,
    zeta,
    zeta_determinant,
    zeta_determinant_product_route,
    zeta_prime0,
)
from equiflow.harness import generators as gen
from equiflow.specflow import HermitianPath, spectral_flow
from equiflow.winding import path_derivative

W3 = np.exp(2j * np.pi / 3)


class TestEta:
    def test_direct_sum(self):
        D = np.diag([1.0, -2.0, 3.0]).astype(complex)
        h = np.diag([W3, W3 ** 2, 1.0])
        assert abs(eta(D, h) - (W3 - W3 ** 2 + 1)) < 1e-12

    def test_symmetric_cancellation(self):
        assert eta(np.diag([2.0, -2.0, 1.0, -1.0]).astype(complex)) == 0

    def test_s_half(self):
        assert abs(eta(np.diag([4.0]).astype(complex), np.array([[W3]]), 0.5) - W3 / 2) < 1e-12

    def test_rigidity_off_crossings(self):
        # branches never cross zero; eigenvectors rotate inside the isotypes
        h = np.diag([W3, W3, 1.0, 1.0])

        def rot(t, k):
            c, s = np.cos(k * t), np.sin(k * t)
            return np.array([[c, -s], [s, c]], dtype=complex)

        def path(t):
            d1 = np.diag([0.5 + 0.3 * np.sin(2 * np.pi * t), -2.0 - t])
            d2 = np.diag([3.0 + np.cos(2 * np.pi * t), -1.0 - 0.5 * t])
            B = np.zeros((4, 4), dtype=complex)
            B[:2, :2] = rot(t, 2.0) @ d1 @ rot(t, 2.0).conj().T
            B[2:, 2:] = rot(t, 3.0) @ d2 @ rot(t, 3.0).conj().T
            return B

        vals = [eta(path(t), h) for t in np.linspace(0, 1, 20)]
        assert max(abs(v - vals[0]) for v in vals) < 1e-9

    def test_not_equivariant(self):
        with pytest.raises(NotEquivariant):
            eta(np.array([[0.0, 1.0], [1.0, 0.0]]), np.diag([1.0, -1.0]))


class TestReducedEta:
    def test_with_kernel(self):
        D = np.diag([0.0, 5.0]).astype(complex)
        h = np.diag([W3, 1.0])
        assert abs(reduced_eta(D, h) - (1 + W3) / 2) < 1e-12

    def test_invertible_half_eta(self):
        D = np.diag([1.0, -3.0, 2.0]).astype(complex)
        assert abs(reduced_eta(D) - eta(D) / 2) < 1e-12

    def test_crossing_difference(self):
        delta = 0.2
        h = np.diag([W3, 1.0])
        d1 = reduced_eta(np.diag([delta, 5.0]).astype(complex), h)
        d0 = reduced_eta(np.diag([-delta, 5.0]).astype(complex), h)
        assert abs((d1 - d0) - W3) < 1e-12


class TestTruncatedEta:
    def test_large_eps_vanishes(self):
        D = np.diag([1.0, -2.0]).astype(complex)
        assert abs(truncated_eta(D, eps=1e4)) < 1e-12

    def test_small_eps_approaches_eta(self):
        D = np.diag([1.0, -2.0, 0.5]).astype(complex)
        assert abs(truncated_eta(D, eps=1e-12) - eta(D)) < 1e-5

    def test_erfc_value(self):
        assert abs(truncated_eta(np.array([[1.0]]), eps=1.0) - 0.1572992071) < 1e-9
        assert np.isclose(erfc(1.0), 0.1572992071, atol=1e-9)

    def test_quadrature_matches_closed_form(self):
        rng = gen.rng_for(42)
        D = gen.rand_hermitian(3, rng, 2.0) + 0.4 * np.eye(3)
        for eps in (0.3, 1.0):
            q = truncated_eta_quadrature(D, eps=eps)
            c = truncated_eta(D, eps=eps)
            assert abs(q - c) <= 1e-8 * max(abs(c), 1.0)


class TestEtaForm:
    def test_zero_operator(self):
        assert eta_form(np.eye(2), np.zeros((2, 2))) == 0

    def test_dimension_count(self):
        v = eta_form(np.zeros((3, 3)), np.eye(3), eps=np.pi)
        assert abs(v - 3.0) < 1e-12

    def test_gradient_of_truncated_eta(self):
        rng = gen.rng_for(43)
        path, h = gen.commuting_hermitian_path(3, 3, rng)
        t, eps, step = 0.4, 0.8, 1e-5
        fd = (truncated_eta(np.asarray(path(t + step)), h, eps)
              - truncated_eta(np.asarray(path(t - step)), h, eps)) / (2 * step)
        target = -2.0 * eta_form(np.asarray(path(t)), path_derivative(path, t), h, eps)
        assert abs(fd - target) <= 1e-5 * max(abs(target), 1e-3)


class TestHeatTrace:
    def test_two_modes(self):
        v = heat_trace(np.diag([1.0, 2.0]).astype(complex), t=1.0)
        assert abs(v - (np.exp(-1) + np.exp(-2))) < 1e-12

    def test_small_time_dimension(self):
        assert abs(heat_trace(np.diag([1.0, 2.0, 3.0]).astype(complex), t=1e-9) - 3.0) < 1e-6

    def test_character_weight(self):
        v = heat_trace(np.diag([3.0]).astype(complex), np.array([[W3]]), t=0.7)
        assert abs(v - W3 * np.exp(-2.1)) < 1e-12

    def test_monotone_decreasing(self):
        D = np.diag([0.5, 1.5, 2.5]).astype(complex)
        vals = [heat_trace(D, t=t).real for t in (0.2, 0.5, 1.0, 2.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestZeta:
    def test_prime_at_zero(self):
        assert abs(zeta_prime0(np.diag([2.0, 3.0]).astype(complex)) + np.log(6)) < 1e-12

    def test_s_half(self):
        v = zeta(np.diag([4.0]).astype(complex), np.array([[W3]]), 0.5)
        assert abs(v - W3 / 2) < 1e-12

    def test_kernel_rejected(self):
        with pytest.raises(KernelPresent):
            zeta(np.diag([0.0, 1.0]).astype(complex), s=1.0)

    def test_not_positive(self):
        with pytest.raises(NotPositive):
            zeta_prime0(np.diag([-1.0, 2.0]).astype(complex))

    def test_mellin_cross_check(self):
        rng = gen.rng_for(44)
        D = gen.rand_hermitian(3, rng, 1.0)
        D = D @ D.conj().T + 0.3 * np.eye(3)
        for s in (1.0, 2.0):
            direct = zeta(D, s=s)
            assert abs(mellin_zeta(D, s=s) - direct) <= 1e-6 * abs(direct)

    def test_mellin_eta_cross_check(self):
        D = np.diag([0.8, -1.7, 2.4]).astype(complex)
        for s in (1.0, 2.0):
            direct = eta(D, s=s)
            assert abs(mellin_eta(D, s=s) - direct) <= 1e-6 * max(abs(direct), 1e-3)


class TestZetaDeterminant:
    def test_positive_definite(self):
        assert abs(zeta_determinant(np.diag([2.0, 3.0]).astype(complex)) - 6.0) < 1e-10

    def test_indefinite_phase(self):
        assert abs(zeta_determinant(np.diag([2.0, -3.0]).astype(complex)) + 6.0) < 1e-10

    def test_scalar_character(self):
        lam, chi = -2.5, W3
        v = zeta_determinant(np.array([[lam]]), np.array([[chi]]))
        expect = np.exp((1j * np.pi / 2) * (chi - chi * np.sign(lam))) * abs(lam) ** chi
        assert abs(v - expect) < 1e-12

    def test_equals_matrix_determinant(self):
        rng = gen.rng_for(45)
        for i in range(10):
            D = gen.rand_hermitian(4, rng, 2.0)
            if np.min(np.abs(np.linalg.eigvalsh(D))) < 1e-2:
                continue
            det = np.linalg.det(D)
            assert abs(zeta_determinant(D) - det) <= 1e-10 * abs(det)

    def test_two_routes_agree(self):
        rng = gen.rng_for(46)
        h, _, blocks, R = gen.zn_action(4, 3, rng)
        Dd = np.zeros((4, 4), dtype=complex)
        for idx in blocks:
            Dd[np.ix_(idx, idx)] = gen.rand_hermitian(len(idx), rng, 2.0)
        D = R @ Dd @ R.conj().T + 0.25 * np.eye(4)
        r1 = zeta_determinant(D, h)
        r2 = zeta_determinant_product_route(D, h)
        assert abs(r1 - r2) <= 1e-10 * abs(r1)

    def test_kernel_rejected(self):
        with pytest.raises(KernelPresent):
            zeta_determinant(np.diag([0.0, 1.0]).astype(complex))


class TestGetzler:
    def test_constant_path(self):
        path = HermitianPath(2, lambda t: np.diag([1.0, -2.0]).astype(complex))
        assert abs(getzler_spectral_flow(path)) < 1e-10

    def test_single_crossing(self):
        path = HermitianPath(2, lambda t: np.diag([2 * t - 1, 1.0]).astype(complex))
        h = np.diag([W3, 1.0])
        assert abs(getzler_spectral_flow(path, h) - W3) < 1e-8

    def test_matches_spectral_flow_random(self):
        for i in range(8):
            path, h = gen.commuting_hermitian_path(3 + i % 3, 2 + i % 3, gen.rng_for(470 + i))
            e0 = np.min(np.abs(np.linalg.eigvalsh(np.asarray(path(0.0)))))
            e1 = np.min(np.abs(np.linalg.eigvalsh(np.asarray(path(1.0)))))
            if min(e0, e1) < 1e-3:
                continue
            g = getzler_spectral_flow(path, h)
            s = spectral_flow(path, h).value
            assert abs(g - s) <= 1e-6


class TestEtaLogDefect:
    def test_equal_operators(self):
        D = np.diag([1.0, -2.0]).astype(complex)
        lhs, rhs, defect = eta_log_defect(D, D)
        assert abs(defect) < 1e-12

    def test_saturated_no_swap(self):
        # commuting, no eigenvalue changes sign: defect vanishes
        D0 = np.diag([5.0, -6.0]).astype(complex)
        D1 = np.diag([7.5, -4.8]).astype(complex)
        _, _, defect = eta_log_defect(D0, D1)
        assert abs(defect) < 1e-8

    def test_single_crossing_nonsaturated_value(self):
        # scalar-erf oracle: lhs = chi, rhs = -chi erf(delta),
        # so the defect is chi (1 + erf(delta)) for this shallow crossing
        delta = 0.1
        h = np.diag([W3, 1.0])
        D0 = np.diag([-delta, 5.0]).astype(complex)
        D1 = np.diag([delta, 5.0]).astype(complex)
        lhs, rhs, defect = eta_log_defect(D0, D1, h)
        assert abs(lhs - W3) < 1e-12
        assert abs(defect - W3 * (1 + erf(delta))) < 1e-10

    def test_saturated_crossing_in_lattice(self):
        h = np.diag([W3, 1.0])
        D0 = np.diag([-5.0, 7.0]).astype(complex)
        D1 = np.diag([5.0, 7.0]).astype(complex)
        _, _, defect = eta_log_defect(D0, D1, h)
        coeffs, resid = fit_character_lattice(defect, [W3, 1.0])
        assert resid < 1e-6
        assert list(coeffs) == [1, 0]

    def test_exp_contract_trivial_action(self):
        D0 = np.diag([-5.0, 7.0]).astype(complex)
        D1 = np.diag([5.0, 7.0]).astype(complex)
        lhs, rhs, _ = eta_log_defect(D0, D1)
        assert abs(np.exp(2j * np.pi * lhs) - np.exp(2j * np.pi * rhs)) < 1e-8

    def test_kernel_rejected(self):
        with pytest.raises(KernelPresent):
            eta_log_defect(np.diag([0.0, 1.0]).astype(complex),
                           np.diag([1.0, 1.0]).astype(complex))
