"""Equivariant eta and zeta invariants of finite Hermitian operators.

Spectral sums run over eigenvalue clusters; each cluster carries the trace
of the symmetry on its eigenspace as weight.  The s-dependent quantities are
finite sums with principal powers; Mellin-transform quadratures are provided
as verification-only cross-checks.
"""

from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np
from scipy.special import erfc, gamma as gamma_fn

from .errors import BranchCut, KernelPresent, NotEquivariant, NotPositive
from .spectra import (
    eig_hermitian,
    integrate,
    opnorm,
    principal_log_unitary,
    weighted_trace,
)
from .tolerances import DEFAULT, TolerancePolicy
from .winding import path_derivative

__all__ = [
    "SpectralOperator",
    "EtaZetaReport",
    "spectral_report",
    "eta",
    "reduced_eta",
    "truncated_eta",
    "truncated_eta_quadrature",
    "eta_form",
    "getzler_spectral_flow",
    "heat_trace",
    "zeta",
    "zeta_prime0",
    "zeta_determinant",
    "zeta_determinant_product_route",
    "mellin_eta",
    "mellin_zeta",
    "eta_log_defect",
    "fit_character_lattice",
]


@dataclass
class SpectralOperator:
    """Hermitian D with a commuting symmetry h; caches eigen/cluster data.

    weights[c] = Tr(h | cluster c eigenspace); values[c] = cluster eigenvalue.
    """

    D: np.ndarray
    h: np.ndarray = None
    policy: TolerancePolicy = DEFAULT
    values: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)
    dims: np.ndarray = field(init=False)

    def __post_init__(self):
        D = np.asarray(self.D, dtype=complex)
        self.D = D
        if self.h is not None:
            h = np.asarray(self.h, dtype=complex)
            self.h = h
            if opnorm(h @ D - D @ h) > max(self.policy.commute_tol, 1e-9) * max(opnorm(D), 1.0) * 10:
                raise NotEquivariant("[h, D] exceeds the commutator tolerance")
        es = eig_hermitian(D, self.policy)
        self.eigensystem = es
        vals, wts, dims = [], [], []
        for idx in es.cluster_slices():
            vals.append(float(np.mean(es.values[idx])))
            basis = es.vectors[:, idx]
            if self.h is None:
                wts.append(complex(len(idx)))
            else:
                wts.append(weighted_trace(self.h, basis, self.policy, check_invariant=False))
            dims.append(len(idx))
        self.values = np.array(vals)
        self.weights = np.array(wts, dtype=complex)
        self.dims = np.array(dims)

    @property
    def zero_scale(self):
        return max(float(np.max(np.abs(self.values), initial=0.0)), 1.0)

    def kernel_mask(self):
        return np.abs(self.values) <= self.policy.zero_tol * self.zero_scale

    def kernel_trace(self):
        return complex(np.sum(self.weights[self.kernel_mask()]))

    def kernel_basis(self):
        es = self.eigensystem
        cols = []
        for idx, small in zip(es.cluster_slices(), self.kernel_mask()):
            if small:
                cols.append(es.vectors[:, idx])
        return np.hstack(cols) if cols else np.zeros((self.D.shape[0], 0), dtype=complex)


def _spec(D, h, policy) -> SpectralOperator:
    if isinstance(D, SpectralOperator):
        return D
    return SpectralOperator(D, h, policy)


@dataclass
class EtaZetaReport:
    """Bundle of the spectral invariants of one operator/symmetry pair."""

    operator: SpectralOperator
    eta: complex
    reduced_eta: complex

    def zeta_at(self, s):
        return zeta(self.operator, s=s, policy=self.operator.policy)

    def zeta_prime0(self):
        return zeta_prime0(self.operator, policy=self.operator.policy)

    def zeta_det(self):
        return zeta_determinant(self.operator, policy=self.operator.policy)

    def truncated_eta(self, eps):
        return truncated_eta(self.operator, eps=eps, policy=self.operator.policy)


def spectral_report(D, h=None, policy: TolerancePolicy = DEFAULT) -> EtaZetaReport:
    op = _spec(D, h, policy)
    e = eta(op, policy=policy)
    return EtaZetaReport(operator=op, eta=e,
                         reduced_eta=complex((e + op.kernel_trace()) / 2.0))


def eta(D, h=None, s: complex = 0.0, policy: TolerancePolicy = DEFAULT) -> complex:
    """Equivariant eta function: sum over nonzero spectrum of
    Tr(h|lambda) * sgn(lambda) * |lambda|^{-s}."""
    op = _spec(D, h, policy)
    m = ~op.kernel_mask()
    lam = op.values[m]
    w = op.weights[m]
    return complex(np.sum(w * np.sign(lam) * np.abs(lam) ** (-s)))


def reduced_eta(D, h=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """(eta + Tr(h|ker D)) / 2."""
    op = _spec(D, h, policy)
    return complex((eta(op, policy=policy) + op.kernel_trace()) / 2.0)


def truncated_eta(D, h=None, eps: float = 1.0, policy: TolerancePolicy = DEFAULT) -> complex:
    """Tail of the eta Mellin integral from eps, in closed form:
    sum of Tr(h|lambda) * sgn(lambda) * erfc(sqrt(eps) |lambda|)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    op = _spec(D, h, policy)
    m = ~op.kernel_mask()
    lam = op.values[m]
    w = op.weights[m]
    return complex(np.sum(w * np.sign(lam) * erfc(np.sqrt(eps) * np.abs(lam))))


def truncated_eta_quadrature(D, h=None, eps: float = 1.0,
                             policy: TolerancePolicy = DEFAULT) -> complex:
    """Verification route: (1/Gamma(1/2)) int_eps^inf t^{-1/2} Tr(h D e^{-t D^2}) dt."""
    op = _spec(D, h, policy)
    m = ~op.kernel_mask()
    lam = op.values[m]
    w = op.weights[m]
    lam_min = np.min(np.abs(lam)) if lam.size else 1.0

    def f(t):
        return complex(np.sum(w * lam * np.exp(-t * lam ** 2))) / np.sqrt(t)

    t_max = eps + 42.0 / lam_min ** 2
    return complex(integrate(f, eps, t_max, policy) / gamma_fn(0.5))


def eta_form(D, X, h=None, eps: float = 1.0, policy: TolerancePolicy = DEFAULT) -> complex:
    """One-form sqrt(eps/pi) * Tr(h X e^{-eps D^2}) via the eigenbasis of D."""
    op = _spec(D, h, policy)
    es = op.eigensystem
    X = np.asarray(X, dtype=complex)
    hX = X if op.h is None else op.h @ X
    M = es.vectors.conj().T @ hX @ es.vectors
    return complex(sqrt(eps / pi) * np.sum(np.diag(M) * np.exp(-eps * es.values ** 2)))


def heat_trace(D, h=None, t: float = 1.0, positive_only: bool = False,
               policy: TolerancePolicy = DEFAULT) -> complex:
    """Sum of Tr(h|lambda) e^{-lambda t}; positive_only restricts to the
    positive spectrum (renormalised variant)."""
    if t <= 0:
        raise ValueError("t must be positive")
    op = _spec(D, h, policy)
    lam, w = op.values, op.weights
    if positive_only:
        m = lam > policy.zero_tol * op.zero_scale
        lam, w = lam[m], w[m]
    return complex(np.sum(w * np.exp(-lam * t)))


def zeta(D, h=None, s: complex = 0.0, policy: TolerancePolicy = DEFAULT) -> complex:
    """Equivariant zeta function over the positive spectrum with principal powers.

    Raises KernelPresent when D has spectrum at 0.
    """
    op = _spec(D, h, policy)
    if np.any(op.kernel_mask()):
        raise KernelPresent("zeta requires 0 not in spec(D)")
    m = op.values > 0
    lam = op.values[m]
    w = op.weights[m]
    return complex(np.sum(w * lam ** (-s)))


def zeta_prime0(D, h=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Derivative of zeta at s = 0 for positive definite D: -sum Tr(h|l) log(l)."""
    op = _spec(D, h, policy)
    if np.any(op.values <= policy.zero_tol * op.zero_scale):
        raise NotPositive("zeta_prime0 requires a positive definite operator")
    return complex(-np.sum(op.weights * np.log(op.values)))


def zeta_determinant(D, h=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Regularised determinant of an invertible Hermitian operator:

        exp( (i pi / 2) (zeta(D^2, 0) - eta(D)) - zeta'(D^2, 0) / 2 )

    with zeta(D^2, 0) = Tr(h) and zeta'(D^2, 0) = -sum Tr(h|l) log(l^2).
    With trivial symmetry this equals det(D).
    """
    op = _spec(D, h, policy)
    if np.any(op.kernel_mask()):
        raise KernelPresent("zeta determinant requires an invertible operator")
    z0 = complex(np.sum(op.weights))
    eta0 = eta(op, policy=policy)
    zdot = complex(-np.sum(op.weights * np.log(op.values ** 2)))
    return complex(np.exp((1j * pi / 2.0) * (z0 - eta0) - zdot / 2.0))


def zeta_determinant_product_route(D, h=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Independent eigenvalue-product route: each eigenvalue contributes
    exp(Tr(h|l) * (log|l| + i pi (1 - sgn l)/2))."""
    op = _spec(D, h, policy)
    if np.any(op.kernel_mask()):
        raise KernelPresent("zeta determinant requires an invertible operator")
    total = 0.0 + 0.0j
    for lam, w in zip(op.values, op.weights):
        total += w * (np.log(abs(lam)) + 1j * pi * (1 - np.sign(lam)) / 2.0)
    return complex(np.exp(total))


def mellin_zeta(D, h=None, s: complex = 1.0, policy: TolerancePolicy = DEFAULT) -> complex:
    """Quadrature cross-check of zeta via (1/Gamma(s)) int t^{s-1} Tr(h e^{-tD}) dt
    over the positive spectrum; requires Re(s) > 0."""
    op = _spec(D, h, policy)
    m = op.values > policy.zero_tol * op.zero_scale
    lam = op.values[m]
    w = op.weights[m]
    if lam.size == 0:
        return 0.0 + 0.0j
    lam_min = float(np.min(lam))

    def f(t):
        return complex(np.sum(w * np.exp(-lam * t))) * t ** (s - 1)

    t_max = 42.0 / lam_min
    return complex(integrate(f, 1e-12, t_max, policy) / gamma_fn(s))


def mellin_eta(D, h=None, s: complex = 1.0, policy: TolerancePolicy = DEFAULT) -> complex:
    """Quadrature cross-check of eta via the Mellin transform of
    Tr(h D e^{-t D^2}), after the substitution t = u^2."""
    op = _spec(D, h, policy)
    m = ~op.kernel_mask()
    lam = op.values[m]
    w = op.weights[m]
    if lam.size == 0:
        return 0.0 + 0.0j
    lam_min = float(np.min(np.abs(lam)))

    def f(u):
        return 2.0 * u ** s * complex(np.sum(w * lam * np.exp(-(u * lam) ** 2)))

    u_max = 6.5 / lam_min
    return complex(integrate(f, 0.0, u_max, policy) / gamma_fn((s + 1) / 2.0))


def getzler_spectral_flow(path, h=None, eps: float = 1.0,
                          policy: TolerancePolicy = DEFAULT) -> complex:
    """Spectral flow from truncated reduced-eta data:

        1/2 [ eta_eps(D(1)) - eta_eps(D(0)) - int_0^1 (d/dt) eta_eps dt ]

    with the smooth closed-form derivative
    (d/dt) eta_eps = -2 sqrt(eps/pi) Tr(h dD/dt e^{-eps D^2}).
    Equals the grid-partition spectral flow within quadrature tolerance.
    """
    e1 = truncated_eta(np.asarray(path(1.0), dtype=complex), h, eps, policy)
    e0 = truncated_eta(np.asarray(path(0.0), dtype=complex), h, eps, policy)

    def integrand(t):
        D = np.asarray(path(t), dtype=complex)
        dD = path_derivative(path, t)
        return -2.0 * eta_form(D, dD, h, eps, policy)

    var = integrate(integrand, 0.0, 1.0, policy)
    return complex(0.5 * (e1 - e0 - var))


def _erf_unitary(D, policy):
    """exp(i pi erf(D)) through the eigenbasis of D."""
    es = eig_hermitian(np.asarray(D, dtype=complex), policy)
    from scipy.special import erf
    return es.vectors @ np.diag(np.exp(1j * pi * erf(es.values))) @ es.vectors.conj().T


def eta_log_defect(D0, D1, h=None, policy: TolerancePolicy = DEFAULT):
    """Compare the reduced-eta difference with the principal trace-log form.

    Returns (lhs, rhs, defect):
        lhs    = reduced_eta(D1) - reduced_eta(D0)
        rhs    = (1/2 pi i) Tr(h Log(T* K)),  T = exp(i pi erf(D1)),
                                              K = exp(i pi erf(D0))
        defect = lhs - rhs.

    For saturated spectra (|lambda| >> 1) the defect is an integer combination
    of character values of h (the crossing count of the connecting path).
    Raises KernelPresent for singular input, BranchCut when spec(T*K) touches -1.
    """
    op0 = _spec(D0, h, policy)
    op1 = _spec(D1, h, policy)
    if np.any(op0.kernel_mask()) or np.any(op1.kernel_mask()):
        raise KernelPresent("eta_log_defect requires invertible operators")
    lhs = reduced_eta(op1, policy=policy) - reduced_eta(op0, policy=policy)
    T = _erf_unitary(op1.D, policy)
    K = _erf_unitary(op0.D, policy)
    L = principal_log_unitary(T.conj().T @ K, 0.0, policy)
    hh = op0.h if op0.h is not None else np.eye(op0.D.shape[0], dtype=complex)
    rhs = complex(np.trace(hh @ L) / (2j * pi))
    return lhs, rhs, complex(lhs - rhs)


def fit_character_lattice(value, char_values, max_radius: int = 2):
    """Best integer combination of character values approximating `value`.

    Solves min |value - sum n_j chi_j| over integer vectors n by rounding the
    least-squares solution and searching a small neighbourhood.  Returns
    (coefficients, residual).
    """
    chars = np.asarray(char_values, dtype=complex)
    d = chars.size
    if d == 0:
        return np.zeros(0, dtype=int), abs(value)
    A = np.vstack([chars.real, chars.imag])  # 2 x d
    b = np.array([np.real(value), np.imag(value)])
    n0, *_ = np.linalg.lstsq(A, b, rcond=None)
    base = np.round(n0).astype(int)
    best = None
    offsets = np.arange(-max_radius, max_radius + 1)
    grids = np.meshgrid(*([offsets] * d), indexing="ij")
    cand = np.stack([g.ravel() for g in grids], axis=1)
    for off in cand:
        n = base + off
        r = abs(value - np.sum(n * chars))
        if best is None or r < best[1]:
            best = (n.copy(), float(r))
    return best
