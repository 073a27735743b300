"""Hermitian symplectic space, equivariant Lagrangian projections, pair
diagnostics, APS-type boundary projections and the finite canonical determinant.

Conventions (see docs/conventions.md): the 2n-dimensional boundary space
splits into the first n coordinates (the +i eigenspace of gamma) and the
last n (the -i eigenspace); gamma = diag(i*I_n, -i*I_n).  A Lagrangian
projection is encoded by an n x n unitary T through

    P = 1/2 [[I, T*], [T, I]],      im(P) = {(v, Tv)}.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    KernelLagrangianInvalid,
    NotEquivariant,
    NotLagrangian,
    NotUnitary,
)
from .spectra import eig_hermitian, opnorm
from .tolerances import DEFAULT, TolerancePolicy

__all__ = [
    "SymplecticSpace",
    "EquivariantIsometry",
    "LagrangianProjection",
    "PairReport",
    "BoundaryOperator",
    "make_projection_from_unitary",
    "unitary_of_projection",
    "make_isometry",
    "pair_report",
    "aps_projection",
    "canonical_determinant",
    "flip_orientation",
    "commutator_norm",
    "check_unitary",
]


def check_unitary(U, tol=1e-10, what="matrix"):
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise NotUnitary(f"{what} must be square")
    n = U.shape[0]
    if opnorm(U.conj().T @ U - np.eye(n)) > tol:
        raise NotUnitary(f"{what} is not unitary within {tol}")
    return U


def commutator_norm(A, B):
    return opnorm(A @ B - B @ A)


@dataclass(frozen=True)
class SymplecticSpace:
    """C^{2n} with gamma = diag(i*I_n, -i*I_n); gamma^2 = -I, gamma^* = -gamma."""

    n: int

    @property
    def dim(self):
        return 2 * self.n

    @property
    def gamma(self):
        n = self.n
        return np.diag(np.concatenate([1j * np.ones(n), -1j * np.ones(n)]))

    def form(self, x, y):
        """Symplectic form omega(x, y) = <x, gamma y>."""
        return complex(np.vdot(x, self.gamma @ y))


@dataclass
class LagrangianProjection:
    """Orthogonal Lagrangian projection P = 1/2 [[I, T*], [T, I]]."""

    T: np.ndarray
    P: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.T.shape[0]

    @property
    def space(self):
        return SymplecticSpace(self.n)

    def image_basis(self):
        """Orthonormal columns spanning im(P) = {(v, Tv)}: (I; T)/sqrt(2)."""
        n = self.n
        return np.vstack([np.eye(n), self.T]) / np.sqrt(2.0)

    def kernel_basis(self):
        """Orthonormal columns spanning ker(P) = {(v, -Tv)}."""
        n = self.n
        return np.vstack([np.eye(n), -self.T]) / np.sqrt(2.0)

    def complement(self):
        """The complementary Lagrangian projection I - P (unitary -T)."""
        return make_projection_from_unitary(-self.T)


def make_projection_from_unitary(T, policy: TolerancePolicy = DEFAULT) -> LagrangianProjection:
    """Build the Lagrangian projection associated to an n x n unitary T."""
    T = check_unitary(T, max(policy.eig_tol * 100, 1e-10), "T")
    n = T.shape[0]
    P = 0.5 * np.block([[np.eye(n), T.conj().T], [T, np.eye(n)]])
    return LagrangianProjection(T=T, P=P)


def unitary_of_projection(P, policy: TolerancePolicy = DEFAULT):
    """Recover T from a 2n x 2n Lagrangian projection matrix.

    Raises NotLagrangian unless P is an orthogonal projection with
    gamma P gamma^* = I - P within 1e-10.
    """
    P = np.asarray(P, dtype=complex)
    m = P.shape[0]
    if P.ndim != 2 or P.shape[0] != P.shape[1] or m % 2 != 0:
        raise NotLagrangian("P must be a square matrix of even dimension")
    n = m // 2
    tol = 1e-10
    if opnorm(P @ P - P) > tol or opnorm(P - P.conj().T) > tol:
        raise NotLagrangian("P is not an orthogonal projection within 1e-10")
    gamma = SymplecticSpace(n).gamma
    if opnorm(gamma @ P @ gamma.conj().T - (np.eye(m) - P)) > tol:
        raise NotLagrangian("gamma P gamma^* != I - P within 1e-10")
    T = 2.0 * P[n:, :n]
    T = check_unitary(T, 1e-8, "recovered T")
    return T


def as_projection(P, policy: TolerancePolicy = DEFAULT) -> LagrangianProjection:
    """Coerce a matrix or LagrangianProjection into a LagrangianProjection."""
    if isinstance(P, LagrangianProjection):
        return P
    return make_projection_from_unitary(unitary_of_projection(P, policy), policy)


@dataclass
class EquivariantIsometry:
    """Block-diagonal unitary h = diag(a, W a W^*) commuting with gamma."""

    a: np.ndarray
    W: np.ndarray
    h: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.a.shape[0]

    def commutes_with(self, M, policy: TolerancePolicy = DEFAULT):
        M = np.asarray(M, dtype=complex)
        return commutator_norm(self.h, M) <= policy.commute_tol * max(opnorm(M), 1.0)


def make_isometry(a, W, policy: TolerancePolicy = DEFAULT) -> EquivariantIsometry:
    a = check_unitary(a, 1e-10, "a")
    W = check_unitary(W, 1e-10, "W")
    if a.shape != W.shape:
        raise NotUnitary("a and W must have the same shape")
    n = a.shape[0]
    h = np.zeros((2 * n, 2 * n), dtype=complex)
    h[:n, :n] = a
    h[n:, n:] = W @ a @ W.conj().T
    return EquivariantIsometry(a=a, W=W, h=h)


def _actor_block(h, n):
    """Extract the action a on the first-block coordinates from h (or pass a through)."""
    if h is None:
        return np.eye(n, dtype=complex)
    if isinstance(h, EquivariantIsometry):
        return h.a
    h = np.asarray(h, dtype=complex)
    if h.shape == (n, n):
        return h
    if h.shape == (2 * n, 2 * n):
        return h[:n, :n]
    raise NotEquivariant(f"symmetry has incompatible shape {h.shape}")


@dataclass
class PairReport:
    """Diagnostics of a Lagrangian projection pair (P, Q) under the action of h.

    invertible          PQ: im(Q) -> im(P) invertible (finite model: the
                        Fredholm criterion is vacuously true)
    fredholm            always True at matrix scale (empty essential spectrum)
    intersection_dim    dim ker(I + T*S) = dim (ker P & im Q)
    intersection_trace  Tr(a | ker(I + T*S)) = Tr(h | ker P & im Q)
    witness_basis       orthonormal 2n-dim basis of ker P & im Q
    """

    invertible: bool
    intersection_dim: int
    intersection_trace: complex
    witness_basis: np.ndarray
    fredholm: bool = True
    sigma_min: float = 0.0


def pair_report(P, Q, h=None, policy: TolerancePolicy = DEFAULT,
                rank_tol: float = None) -> PairReport:
    """Invertibility and intersection data for a pair of Lagrangian projections."""
    P = as_projection(P, policy)
    Q = as_projection(Q, policy)
    n = P.n
    a = _actor_block(h, n)
    if h is not None:
        hfull = h.h if isinstance(h, EquivariantIsometry) else _embed_actor(h, n)
        for X in (P.P, Q.P):
            if commutator_norm(hfull, X) > max(policy.commute_tol, 1e-9) * 10:
                raise NotEquivariant("h does not commute with the projection pair")
    T, S = P.T, Q.T
    M = np.eye(n) + T.conj().T @ S
    svals = np.linalg.svd(M, compute_uv=False)
    if rank_tol is None:
        rank_tol = max(policy.zero_tol, 10 * policy.eig_tol * n)
    smin = float(svals[-1]) if n else 0.0
    invertible = bool(smin > rank_tol)
    _, _, Vh = np.linalg.svd(M)
    k = int(np.sum(svals <= rank_tol))
    kerT = Vh.conj().T[:, n - k:] if k else np.zeros((n, 0), dtype=complex)
    trace = complex(np.trace(kerT.conj().T @ a @ kerT)) if k else 0.0 + 0.0j
    # witness vectors inside the 2n-space: ker(P) & im(Q) = {(v, Sv): v in ker M}
    Bq = Q.image_basis()
    wit = Bq @ kerT if k else np.zeros((2 * n, 0), dtype=complex)
    if k:
        wit, _ = np.linalg.qr(wit)
    return PairReport(invertible=invertible, intersection_dim=k, intersection_trace=trace,
                      witness_basis=wit, sigma_min=smin)


def _embed_actor(h, n):
    h = np.asarray(h, dtype=complex)
    if h.shape == (2 * n, 2 * n):
        return h
    if h.shape == (n, n):
        out = np.zeros((2 * n, 2 * n), dtype=complex)
        out[:n, :n] = h
        out[n:, n:] = h
        return out
    raise NotEquivariant(f"symmetry has incompatible shape {h.shape}")


@dataclass
class BoundaryOperator:
    """Hermitian A on C^{2n} anti-commuting with gamma, plus its kernel data."""

    A: np.ndarray
    eigensystem: object
    kernel_basis: np.ndarray

    @property
    def n(self):
        return self.A.shape[0] // 2


def make_boundary_operator(A, policy: TolerancePolicy = DEFAULT) -> BoundaryOperator:
    A = np.asarray(A, dtype=complex)
    m = A.shape[0]
    if m % 2 != 0:
        raise ValueError("boundary operator must act on C^{2n}")
    n = m // 2
    gamma = SymplecticSpace(n).gamma
    nrm = max(opnorm(A), 1.0)
    if opnorm(gamma @ A + A @ gamma) > 1e-10 * nrm:
        raise ValueError("A must anti-commute with gamma within 1e-10 * ||A||")
    es = eig_hermitian(A, policy)
    ker = es.vectors[:, np.abs(es.values) <= policy.zero_tol * nrm]
    return BoundaryOperator(A=A, eigensystem=es, kernel_basis=ker)


def aps_projection(A, L=None, policy: TolerancePolicy = DEFAULT) -> LagrangianProjection:
    """Boundary projection P^+ + P_L for a gamma-anticommuting Hermitian A.

    L is an orthonormal basis of a Lagrangian inside ker(A), i.e.
    gamma(L) = L^perp & ker(A); omit it when A is invertible.
    """
    bop = A if isinstance(A, BoundaryOperator) else make_boundary_operator(A, policy)
    es = bop.eigensystem
    nrm = max(opnorm(bop.A), 1.0)
    pos = es.vectors[:, es.values > policy.zero_tol * nrm]
    ker = bop.kernel_basis
    kdim = ker.shape[1]
    if L is None:
        L = np.zeros((bop.A.shape[0], 0), dtype=complex)
    L = np.asarray(L, dtype=complex)
    if L.ndim == 1:
        L = L[:, None]
    ldim = L.shape[1]
    if 2 * ldim != kdim:
        raise KernelLagrangianInvalid(
            f"ker(A) has dimension {kdim}; L must span half of it, got {ldim}")
    if ldim:
        if opnorm(L.conj().T @ L - np.eye(ldim)) > 1e-10:
            raise KernelLagrangianInvalid("L basis is not orthonormal")
        if opnorm(L - ker @ (ker.conj().T @ L)) > 1e-8:
            raise KernelLagrangianInvalid("L does not lie inside ker(A)")
        gamma = SymplecticSpace(bop.n).gamma
        if opnorm(L.conj().T @ gamma @ L) > 1e-8:
            raise KernelLagrangianInvalid("gamma(L) is not orthogonal to L inside ker(A)")
    Pm = pos @ pos.conj().T
    if ldim:
        Pm = Pm + L @ L.conj().T
    try:
        T = unitary_of_projection(Pm, policy)
    except NotLagrangian as exc:
        raise KernelLagrangianInvalid(f"resulting projection is not Lagrangian: {exc}")
    return make_projection_from_unitary(T, policy)


def canonical_determinant(P, P_M, h=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Finite-dimensional canonical determinant det(a (I + T^{-1} K) / 2).

    T and K are the unitaries of the boundary projection P and of the
    reference (Calderon-type) projection P_M; a is the first-block action.
    """
    P = as_projection(P, policy)
    P_M = as_projection(P_M, policy)
    n = P.n
    a = _actor_block(h, n)
    if h is not None:
        hfull = h.h if isinstance(h, EquivariantIsometry) else _embed_actor(h, n)
        for X in (P.P, P_M.P):
            if commutator_norm(hfull, X) > max(policy.commute_tol, 1e-9) * 10:
                raise NotEquivariant("h does not commute with the projections")
    T, K = P.T, P_M.T
    return complex(np.linalg.det(a @ (np.eye(n) + T.conj().T @ K) / 2.0))


def flip_orientation(P, policy: TolerancePolicy = DEFAULT) -> LagrangianProjection:
    """Reinterpret a Lagrangian projection in the opposite orientation.

    The associated unitary maps T -> -T^*; applying the flip twice restores
    a projection with unitary T.  This realizes the complementary boundary
    condition of the orientation-reversed piece in splitting experiments.
    """
    P = as_projection(P, policy)
    return make_projection_from_unitary(-P.T.conj().T, policy)
