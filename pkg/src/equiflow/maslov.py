"""Equivariant Maslov index of Lagrangian-pair paths (two independent modes),
the Maslov triple index, and the Maslov cycle predicate.

A path of Lagrangian pairs is carried by the unitaries (T(t), S(t)) of its
two projection paths.  The index counts intersections ker P(t) & im Q(t),
equivalently crossings of spec(T*(t)S(t)) through -1, weighted by the trace
of the actor on the crossing cluster and signed by the crossing direction.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotLagrangian, TrackingAmbiguous
from .specflow import UnitaryPath
from .symplectic import LagrangianProjection, as_projection, make_projection_from_unitary, pair_report
from .tolerances import DEFAULT, TolerancePolicy
from .winding import double_index, winding_number

__all__ = [
    "LagrangianPath",
    "maslov_index",
    "triple_index_path",
    "triple_index_static",
    "in_maslov_cycle",
]


@dataclass
class LagrangianPath:
    """Path t -> Lagrangian projection, carried by its unitary sampler T(t)."""

    n: int
    unitary: callable
    name: str = "lagrangian_path"

    @classmethod
    def from_projections(cls, sampler, n, name="lagrangian_path"):
        def unit(t):
            P = sampler(t)
            return P.T if isinstance(P, LagrangianProjection) else \
                as_projection(P).T
        return cls(n=n, unitary=unit, name=name)

    def projection(self, t) -> LagrangianProjection:
        return make_projection_from_unitary(self.unitary(t))

    def __call__(self, t):
        return self.unitary(t)


def _pair_path(L1, L2):
    def sampler(t):
        T = np.asarray(L1.unitary(t), dtype=complex)
        S = np.asarray(L2.unitary(t), dtype=complex)
        return T.conj().T @ S
    return UnitaryPath(L1.n, sampler, name=f"{L1.name}^* {L2.name}")


def maslov_index(L1: LagrangianPath, L2: LagrangianPath, a=None, mode: str = "winding",
                 policy: TolerancePolicy = DEFAULT, grid: int = 64) -> complex:
    """Equivariant Maslov index of a path of Lagrangian pairs.

    mode "winding": equivariant winding number of T*(t)S(t).
    mode "grid":    scan the invertibility locus of the pair in the
                    2n-dimensional picture, weight each intersection event by
                    the actor trace on ker P & im Q, and sign it by the
                    derivative of the crossing eigenphase through pi.
    Both modes agree within numerical tolerance.
    """
    if mode == "winding":
        return winding_number(_pair_path(L1, L2), a, policy)
    if mode != "grid":
        raise ValueError("mode must be 'winding' or 'grid'")
    return _maslov_grid(L1, L2, a, policy, grid)


def _phase_near_pi(M):
    """Signed angular distance of the eigenphase of M closest to pi."""
    phases = np.angle(np.linalg.eigvals(M))
    rel = np.mod(phases - np.pi + np.pi, 2 * np.pi) - np.pi
    return float(rel[np.argmin(np.abs(rel))])


def _maslov_grid(L1, L2, a, policy, grid):
    eps_t = 10 * policy.zero_tol  # endpoint evaluation rule: step inside by eps
    pair = _pair_path(L1, L2)

    def sigma_min(t):
        n = L1.n
        M = np.eye(n) + np.asarray(pair(t), dtype=complex)
        return float(np.linalg.svd(M, compute_uv=False)[-1])

    ts = np.linspace(eps_t, 1.0 - eps_t, grid)
    sig = np.array([sigma_min(t) for t in ts])
    # candidate intersection windows: local minima below a loose threshold
    thresh = 0.2
    events = []
    k = 0
    while k < len(ts):
        if sig[k] < thresh and (k == 0 or sig[k] <= sig[k - 1]) and \
                (k == len(ts) - 1 or sig[k] <= sig[k + 1]):
            lo = ts[max(k - 1, 0)]
            hi = ts[min(k + 1, len(ts) - 1)]
            t_star, s_star = _ternary_min(sigma_min, lo, hi)
            if s_star < 1e-6 and eps_t < t_star < 1.0 - eps_t:
                if not any(abs(t_star - e) <= 1e-8 for e in events):
                    events.append(t_star)
        k += 1
    total = 0.0 + 0.0j
    for t_star in sorted(events):
        P = L1.projection(t_star)
        Q = L2.projection(t_star)
        rep = pair_report(P, Q, a, policy, rank_tol=1e-6)
        if rep.intersection_dim == 0:
            continue
        delta = min(1e-5, t_star, 1.0 - t_star)
        before = _phase_near_pi(np.asarray(pair(t_star - delta), dtype=complex))
        after = _phase_near_pi(np.asarray(pair(t_star + delta), dtype=complex))
        if after == before:
            raise TrackingAmbiguous(f"cannot orient the intersection at t={t_star:.6g}")
        direction = 1 if after > before else -1
        total += direction * rep.intersection_trace
    return complex(total)


def _ternary_min(f, lo, hi, iters=80):
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
        if hi - lo < 1e-10:
            break
    mid = (lo + hi) / 2.0
    return mid, f(mid)


def triple_index_path(T, S, R, a=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Maslov triple index of three unitary paths:

        w(T* S) + w(S* R) - w(T* R),

    equal to the alternating sum of the three pairwise Maslov indices.
    """
    def prod(X, Y):
        def sampler(t):
            return np.asarray(X(t), dtype=complex).conj().T @ np.asarray(Y(t), dtype=complex)
        return sampler

    w1 = winding_number(prod(T, S), a, policy)
    w2 = winding_number(prod(S, R), a, policy)
    w3 = winding_number(prod(T, R), a, policy)
    return complex(w1 + w2 - w3)


def triple_index_static(P, Q, N, a=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Maslov triple index of three Lagrangian projections via canonical
    contraction paths: tau(T*S, S*R)."""
    P = as_projection(P, policy)
    Q = as_projection(Q, policy)
    N = as_projection(N, policy)
    U = P.T.conj().T @ Q.T
    V = Q.T.conj().T @ N.T
    return double_index(U, V, a, policy)


def in_maslov_cycle(P, P_M, policy: TolerancePolicy = DEFAULT) -> bool:
    """True when the pair (P, P_M) is Fredholm but not invertible: the
    finite-dimensional reading is dim ker(I + T* K) > 0."""
    P = as_projection(P, policy)
    P_M = as_projection(P_M, policy)
    if P.n != P_M.n:
        raise NotLagrangian("projections live on different spaces")
    M = np.eye(P.n) + P.T.conj().T @ P_M.T
    smin = np.linalg.svd(M, compute_uv=False)[-1]
    return bool(smin <= max(policy.zero_tol * 10, 1e-8))
