"""Exactly solvable 1D Dirac models on the circle and the interval.

Circle model (circumference 2 pi, m channels, constant Hermitian potential V,
internal symmetry u with [u, V] = 0, optional rotation action of order N):
spectrum {k + v_j : k in Z}, mode (k, j) carrying weight chi_j(u)^p * w^{k r}.

Interval model (length L): D = -i d/dx + V per channel with boundary space
C^{2m} ordered (value at left end, value at right end), boundary form
gamma = diag(i I_m, -i I_m), transfer matrix M(lambda) = exp(i L (lambda - V)).
A Lagrangian boundary projection P (domain condition P(psi(0), psi(L)) = 0)
yields the secular equation det(I + T* M(lambda)) = 0, whose solutions are
m exact arithmetic progressions.

All sign and orientation conventions are pinned in docs/conventions.md and
asserted by tests.
"""

from dataclasses import dataclass
from math import pi

import numpy as np

from .errors import (
    KernelPresent,
    NotEquivariant,
    RootFindingFailure,
)
from .spectra import eig_hermitian, eig_unitary, opnorm, weighted_trace
from .symplectic import (
    LagrangianProjection,
    as_projection,
    flip_orientation,
    make_projection_from_unitary,
)
from .maslov import triple_index_static
from .tolerances import DEFAULT, TolerancePolicy

__all__ = [
    "CircleDiracModel",
    "IntervalDiracModel",
    "SplitScenario",
    "theta_projection",
    "circle_spectrum",
    "circle_eta",
    "interval_transfer",
    "secular_value",
    "secular_branches",
    "interval_spectrum",
    "interval_calderon",
    "interval_eta",
    "sw_identity_check",
    "splitting_experiment",
    "regularized_signed_sum",
]


def _channel_data(V, u, policy):
    """Joint eigen-data of a commuting pair (V Hermitian, u unitary).

    Returns (values, chars, basis): per channel the V-eigenvalue and the
    u-character, with a common orthonormal basis.
    """
    V = np.asarray(V, dtype=complex)
    m = V.shape[0]
    if u is None:
        es = eig_hermitian(V, policy)
        return es.values.copy(), np.ones(m, dtype=complex), es.vectors
    u = np.asarray(u, dtype=complex)
    if opnorm(u @ V - V @ u) > max(policy.commute_tol, 1e-9) * max(opnorm(V), 1.0) * 10:
        raise NotEquivariant("[u, V] exceeds the commutator tolerance")
    es = eig_hermitian(V, policy)
    vals = np.empty(m)
    chars = np.empty(m, dtype=complex)
    basis = np.empty((m, m), dtype=complex)
    col = 0
    for idx in es.cluster_slices():
        B = es.vectors[:, idx]
        ub = B.conj().T @ u @ B
        ues = eig_unitary(ub, policy)
        for j in range(len(idx)):
            vals[col] = float(np.mean(es.values[idx]))
            chars[col] = np.exp(1j * ues.values[j])
            basis[:, col] = B @ ues.vectors[:, j]
            col += 1
    return vals, chars, basis


@dataclass
class CircleDiracModel:
    """-i d/dx + V on the circle of circumference 2 pi, m channels."""

    V: np.ndarray
    u: np.ndarray = None
    rotation_order: int = None
    policy: TolerancePolicy = DEFAULT

    def __post_init__(self):
        self.V = np.atleast_2d(np.asarray(self.V, dtype=complex))
        self.m = self.V.shape[0]
        vals, chars, basis = _channel_data(self.V, self.u, self.policy)
        self.channel_values = vals
        self.channel_chars = chars
        self.channel_basis = basis


@dataclass
class IntervalDiracModel:
    """-i d/dx + V on [0, L], boundary data (psi(0), psi(L)) in C^{2m}."""

    L: float
    V: np.ndarray
    u: np.ndarray = None
    policy: TolerancePolicy = DEFAULT

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("interval length must be positive")
        self.V = np.atleast_2d(np.asarray(self.V, dtype=complex))
        self.m = self.V.shape[0]
        vals, chars, basis = _channel_data(self.V, self.u, self.policy)
        self.channel_values = vals
        self.channel_chars = chars
        self.channel_basis = basis

    def actor(self, power: int = 1):
        """u^power as an m x m matrix (identity when no symmetry is present)."""
        if self.u is None or power == 0:
            return np.eye(self.m, dtype=complex)
        return np.linalg.matrix_power(np.asarray(self.u, dtype=complex), power)


def theta_projection(theta, m: int = 1) -> LagrangianProjection:
    """Boundary projection with associated unitary T = -diag(e^{i theta_j}).

    The m = 1 model with this projection has spectrum {(theta + 2 pi k)/L}
    and eta invariant 1 - theta/pi for theta in (0, 2 pi).
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if th.size == 1 and m > 1:
        th = np.repeat(th, m)
    T = -np.diag(np.exp(1j * th))
    return make_projection_from_unitary(T)


def interval_transfer(model: IntervalDiracModel, lam) -> np.ndarray:
    """Transfer matrix M(lambda) = exp(i L (lambda I - V)), unitary for real lambda."""
    C = model.channel_basis
    phase = np.exp(1j * model.L * (lam - model.channel_values))
    return C @ np.diag(phase) @ C.conj().T


def secular_value(model: IntervalDiracModel, P, lam) -> complex:
    """det(B* J(lambda)) with B an orthonormal basis of ran(P) and
    J(lambda) v = (v, M(lambda) v); eigenvalues of D_P are its real roots."""
    P = as_projection(P, model.policy)
    B = P.image_basis()
    M = interval_transfer(model, lam)
    J = np.vstack([np.eye(model.m), M])
    return complex(np.linalg.det(B.conj().T @ J))


def secular_branches(model: IntervalDiracModel, P, element_power: int = 0):
    """Exact spectral branches of D_P for constant V.

    The secular condition det(I + T* M(lambda)) = 0 with
    M(lambda) = e^{i lambda L} M(0) reduces to e^{i lambda L} in the spectrum
    of -(T* M(0))^{-1}; each unitary eigenvalue yields the progression
    lambda = (beta_j + 2 pi k)/L.

    Returns (betas in (-pi, pi], weights, dims) with one entry per branch
    cluster; weights are Tr(u^p | branch eigenspace) and dims are the cluster
    multiplicities.
    """
    P = as_projection(P, model.policy)
    T = P.T
    if T.shape[0] != model.m:
        raise ValueError("projection dimension does not match the model")
    if model.u is not None:
        u = np.asarray(model.u, dtype=complex)
        if opnorm(u @ T - T @ u) > max(model.policy.commute_tol, 1e-9) * 10:
            raise NotEquivariant("boundary projection does not commute with the symmetry")
    G = T.conj().T @ interval_transfer(model, 0.0)
    a = model.actor(element_power)
    es = eig_unitary(G, model.policy)
    betas, weights, dims = [], [], []
    for idx in es.cluster_slices():
        g_phase = float(np.angle(np.mean(np.exp(1j * es.values[idx]))))
        # z = -1/g  =>  beta = pi - phase(g)  (mod 2 pi, mapped to (-pi, pi])
        beta = np.mod(pi - g_phase + pi, 2 * pi) - pi
        basis = es.vectors[:, idx]
        w = weighted_trace(a, basis, model.policy, check_invariant=False) \
            if model.u is not None else complex(len(idx))
        betas.append(float(beta))
        weights.append(complex(w))
        dims.append(len(idx))
    return np.array(betas), np.array(weights, dtype=complex), np.array(dims, dtype=int)


def nonreality_check(model: IntervalDiracModel, basis) -> np.ndarray:
    """z-roots of det(B1* + z B2* M(0)) for an arbitrary rank-m boundary basis.

    For a Lagrangian projection all moduli are 1 (real spectrum); moduli away
    from 1 correspond to complex secular roots Im(lambda) = -log|z| / L.
    """
    B = np.asarray(basis, dtype=complex)
    m = model.m
    B1 = B[:m, :]
    B2 = B[m:, :]
    W0 = interval_transfer(model, 0.0)
    nodes = np.exp(2j * pi * np.arange(m + 1) / (m + 1))
    vals = np.array([np.linalg.det(B1.conj().T + z * B2.conj().T @ W0) for z in nodes])
    # exact interpolation of the degree-m polynomial in z
    Vand = np.vander(nodes, m + 1, increasing=True)
    coeffs = np.linalg.solve(Vand, vals)
    poly = np.trim_zeros(coeffs[::-1], trim="f")
    if poly.size <= 1:
        raise RootFindingFailure("degenerate secular polynomial")
    return np.roots(poly)


def _newton_polish(model, P, lam0, policy, iters=4):
    delta = 1e-7 * max(1.0, abs(lam0))
    lam = complex(lam0)
    for _ in range(iters):
        s = secular_value(model, P, lam)
        ds = (secular_value(model, P, lam + delta) - secular_value(model, P, lam - delta)) / (2 * delta)
        if abs(ds) < 1e-14:
            break
        step = s / ds
        lam = lam - step
        if abs(step) < 1e-12:
            break
    if abs(lam.imag) > 1e-8:
        raise RootFindingFailure(f"secular root drifted off the real axis: {lam}")
    return float(lam.real)


def interval_spectrum(model: IntervalDiracModel, P, window, element_power: int = 0,
                      polish: bool = True):
    """Eigenvalues of D_P inside [window[0], window[1]] with character weights.

    Candidates come from the exact branch structure and are polished by
    Newton iteration on the secular value (to 1e-10); multiplicity is the
    branch cluster dimension.
    """
    lo, hi = window
    betas, weights, dims = secular_branches(model, P, element_power)
    sp = 2 * pi / model.L
    out = []
    for beta, w, d in zip(betas, weights, dims):
        base = beta / model.L
        k_lo = int(np.ceil((lo - base) / sp))
        k_hi = int(np.floor((hi - base) / sp))
        for k in range(k_lo, k_hi + 1):
            lam = base + sp * k
            if polish:
                lam = _newton_polish(model, P, lam, model.policy)
            out.append((lam, w, int(d)))
    out.sort(key=lambda r: r[0])
    return out


def interval_calderon(model: IntervalDiracModel):
    """Calderon projection: orthogonal projector onto the Cauchy-data space
    {(v, M(0) v)}, i.e. the graph of K = M(0) = exp(-i L V)."""
    K = interval_transfer(model, 0.0)
    return make_projection_from_unitary(K, model.policy), K


def _taper(x, lam_cut, width):
    out = np.ones_like(x)
    top = x >= lam_cut + width
    mid = (x > lam_cut) & ~top
    out[top] = 0.0
    out[mid] = np.cos(pi * (x[mid] - lam_cut) / (2 * width)) ** 2
    return out


def regularized_signed_sum(values, weights, cutoff, accel: str = "average"):
    """Regularized sum of weight * sgn(value) over an eigenvalue list.

    "average": smooth cutoff taper of width = cutoff (Cesaro-style averaging
    of symmetric partial sums); returns (value at cutoff, |change under
    cutoff halving|).
    "abel": Abel factors x^{|lambda|} with x = exp(-1/cutoff), Richardson
    extrapolated between cutoff and 2*cutoff.

    The supplied list must cover |value| up to the enumeration bound
    reported by `enumeration_bound(cutoff, accel)`.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=complex)
    s = np.sign(v)
    av = np.abs(v)
    if accel == "average":
        def at(lc):
            return complex(np.sum(w * s * _taper(av, lc, lc)))
        val = at(cutoff)
        err = abs(val - at(cutoff / 2))
        return val, err
    if accel == "abel":
        def at(lc):
            return complex(np.sum(w * s * np.exp(-av / lc)))
        v1 = at(cutoff)
        v2 = at(2 * cutoff)
        val = 2 * v2 - v1
        return val, abs(val - v2)
    raise ValueError("accel must be 'average' or 'abel'")


def enumeration_bound(cutoff, accel):
    return 2.0 * cutoff + 2.0 if accel == "average" else 90.0 * cutoff


def circle_spectrum(model: CircleDiracModel, window, u_power: int = 0,
                    rotation_power: int = 0):
    """All eigenvalues k + v_j inside the window with their character weights."""
    lo, hi = window
    out = []
    for v, chi in zip(model.channel_values, model.channel_chars):
        k_lo = int(np.ceil(lo - v))
        k_hi = int(np.floor(hi - v))
        for k in range(k_lo, k_hi + 1):
            w = chi ** u_power
            if rotation_power and model.rotation_order:
                w = w * np.exp(2j * pi * k * rotation_power / model.rotation_order)
            out.append((float(k + v), complex(w)))
    out.sort(key=lambda r: r[0])
    return out


def circle_eta(model: CircleDiracModel, u_power: int = 0, rotation_power: int = 0,
               cutoff: float = 1e4, accel: str = "average", reduced: bool = False):
    """Regularized equivariant eta invariant of the circle model.

    For m = 1, V = (beta), trivial action: eta = 1 - 2 beta for beta in (0, 1).
    For a rotation of order N with character w = e^{2 pi i r / N}: eta = 2/(1 - w),
    independently of beta.
    Returns (value, error_estimate).
    """
    bound = enumeration_bound(cutoff, accel)
    policy = model.policy
    vals_all, wts_all = [], []
    ker_trace = 0.0 + 0.0j
    for v, chi in zip(model.channel_values, model.channel_chars):
        k = np.arange(int(np.ceil(-bound - v)), int(np.floor(bound - v)) + 1)
        lam = k + v
        w = np.full(lam.shape, chi ** u_power, dtype=complex)
        if rotation_power and model.rotation_order:
            w = w * np.exp(2j * pi * k * rotation_power / model.rotation_order)
        zero = np.abs(lam) <= policy.zero_tol
        if np.any(zero):
            if not reduced:
                raise KernelPresent("circle model has spectrum at 0")
            ker_trace += complex(np.sum(w[zero]))
        vals_all.append(lam[~zero])
        wts_all.append(w[~zero])
    vals = np.concatenate(vals_all)
    wts = np.concatenate(wts_all)
    value, err = regularized_signed_sum(vals, wts, cutoff, accel)
    if reduced:
        value = (value + ker_trace) / 2.0
        err = err / 2.0
    return value, err


def interval_eta(model: IntervalDiracModel, P, u_power: int = 0,
                 cutoff: float = 4e3, accel: str = "average", reduced: bool = False):
    """Regularized equivariant eta invariant of D_P on the interval.

    For the m = 1 theta-model: eta = 1 - theta/pi for theta in (0, 2 pi).
    Returns (value, error_estimate).
    """
    bound = enumeration_bound(cutoff, accel)
    betas, weights, _ = secular_branches(model, P, u_power)
    sp = 2 * pi / model.L
    policy = model.policy
    vals_all, wts_all = [], []
    ker_trace = 0.0 + 0.0j
    for beta, w in zip(betas, weights):
        base = beta / model.L
        k = np.arange(int(np.ceil((-bound - base) / sp)), int(np.floor((bound - base) / sp)) + 1)
        lam = base + sp * k
        zero = np.abs(lam) <= policy.zero_tol * 10
        if np.any(zero):
            if not reduced:
                raise KernelPresent("interval model has spectrum at 0")
            ker_trace += complex(w * np.count_nonzero(zero))
        vals_all.append(lam[~zero])
        wts_all.append(np.full(int(np.count_nonzero(~zero)), w, dtype=complex))
    vals = np.concatenate(vals_all)
    wts = np.concatenate(wts_all)
    value, err = regularized_signed_sum(vals, wts, cutoff, accel)
    if reduced:
        value = (value + ker_trace) / 2.0
        err = err / 2.0
    return value, err


def sw_identity_check(model: IntervalDiracModel, P, Q, u_power: int = 0,
                      cutoff: float = 4e3, accel: str = "average"):
    """Exponentiated eta-difference against the boundary determinant:

        exp(2 pi i (reduced_eta(D_P) - reduced_eta(D_Q)))  vs  det(a T* S)

    with T, S the unitaries of P, Q and a = u^p.  Returns
    (lhs, rhs, defect, err_estimate); raises KernelPresent when either
    operator is singular.
    """
    P = as_projection(P, model.policy)
    Q = as_projection(Q, model.policy)
    etaP, errP = interval_eta(model, P, u_power, cutoff, accel, reduced=False)
    etaQ, errQ = interval_eta(model, Q, u_power, cutoff, accel, reduced=False)
    lhs = complex(np.exp(2j * pi * (etaP / 2.0 - etaQ / 2.0)))
    a = model.actor(u_power)
    rhs = complex(np.linalg.det(a @ P.T.conj().T @ Q.T))
    return lhs, rhs, complex(lhs - rhs), float(pi * (errP + errQ))


@dataclass
class SplitScenario:
    """Circle of circumference 2 pi cut at {0, pi} into two length-pi halves.

    The shared boundary space is slot-ordered (value at cut 0, value at cut pi),
    which equals the (left, right) convention of the first half; the second
    half enters through the orientation flip (see docs/conventions.md).
    """

    V: np.ndarray
    P: LagrangianProjection
    u: np.ndarray = None
    u_power: int = 0
    circle_cutoff: float = 1e4
    interval_cutoff: float = 4e3
    accel: str = "average"
    policy: TolerancePolicy = DEFAULT


def splitting_experiment(sc: SplitScenario) -> dict:
    """Test the eta-splitting identity

        reduced_eta(circle) = reduced_eta(M+, P) + reduced_eta(M-, flip(P))
                              + triple_index(flip(Calderon(M-)), P, Calderon(M+)).

    Returns a report dict with every term, the triple index, the residual and
    accumulated regularization error estimates.
    """
    policy = sc.policy
    circle = CircleDiracModel(sc.V, sc.u, policy=policy)
    half_plus = IntervalDiracModel(pi, sc.V, sc.u, policy=policy)
    half_minus = IntervalDiracModel(pi, sc.V, sc.u, policy=policy)
    P = as_projection(sc.P, policy)

    eta_m, err_m = circle_eta(circle, sc.u_power, 0, sc.circle_cutoff, sc.accel, reduced=True)
    eta_p, err_p = interval_eta(half_plus, P, sc.u_power, sc.interval_cutoff, sc.accel,
                                reduced=True)
    P_minus_solver = flip_orientation(P, policy)
    eta_n, err_n = interval_eta(half_minus, P_minus_solver, sc.u_power, sc.interval_cutoff,
                                sc.accel, reduced=True)

    P_cal_plus, _ = interval_calderon(half_plus)
    P_cal_minus, _ = interval_calderon(half_minus)
    first = flip_orientation(P_cal_minus, policy)
    a = half_plus.actor(sc.u_power)
    tau = triple_index_static(first, P, P_cal_plus, a, policy)

    residual = eta_m - eta_p - eta_n - tau
    return {
        "eta_circle": eta_m,
        "eta_plus": eta_p,
        "eta_minus": eta_n,
        "triple_index": tau,
        "residual": complex(residual),
        "error_estimate": float(err_m + err_p + err_n),
    }
