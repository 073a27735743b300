"""Equivariant winding numbers of unitary paths, the equivariant Fredholm
determinant, canonical contraction paths, and double indices.

The winding number counts net eigenphase crossings through the wall at
angle pi (shifted by a deterministic offset when an endpoint has spectrum
at -1), each crossing weighted by the trace of the actor on the crossing
cluster.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    IncompatibleSplitting,
    NotCommuting,
    OffsetExhausted,
)
from .spectra import (
    eig_unitary,
    integrate,
    opnorm,
    principal_log_unitary,
    track_branches,
)
from .specflow import UnitaryPath
from .tolerances import DEFAULT, TolerancePolicy

__all__ = [
    "winding_number",
    "winding_events",
    "winding_from_logs",
    "fredholm_det_path",
    "canonical_path",
    "CanonicalContraction",
    "double_index",
    "relative_double_index",
    "path_derivative",
    "pick_offset",
]

_OFFSET_CEILING = 1e-3


def _as_path(f, dim=None):
    if isinstance(f, UnitaryPath):
        return f
    probe = np.asarray(f(0.0), dtype=complex)
    return UnitaryPath(dim=probe.shape[0], sampler=f)


def _check_actor(path, a, policy, ts=(0.0, 0.5, 1.0)):
    if a is None:
        return np.eye(path.dim, dtype=complex)
    a = np.asarray(a, dtype=complex)
    if a.shape != (path.dim, path.dim):
        raise DimensionMismatch("actor dimension does not match the path")
    for t in ts:
        U = np.asarray(path(t), dtype=complex)
        if opnorm(a @ U - U @ a) > max(policy.commute_tol, 1e-9) * 10:
            raise NotCommuting(f"[a, f({t})] exceeds the commutator tolerance")
    return a


def pick_offset(endpoint_phases, policy: TolerancePolicy = DEFAULT,
                ceiling: float = _OFFSET_CEILING) -> float:
    """Deterministic offset theta >= 0 so that no endpoint phase sits on the
    wall at pi + theta.

    theta = 0 when all endpoint phases are clear of pi; otherwise
    min(ceiling/2, half the minimal endpoint phase-distance to pi), halved
    until admissible.  Raises OffsetExhausted when no theta < ceiling works.
    """
    phases = np.asarray(endpoint_phases, dtype=float)
    if phases.size == 0:
        return 0.0

    def dist_to_wall(theta):
        d = np.abs(np.mod(phases - (np.pi + theta) + np.pi, 2 * np.pi) - np.pi)
        return float(np.min(d))

    if dist_to_wall(0.0) > policy.zero_tol * 10:
        return 0.0
    d = np.abs(np.mod(phases - np.pi + np.pi, 2 * np.pi) - np.pi)
    d_pos = d[d > policy.zero_tol * 10]
    theta = min(ceiling / 2, float(np.min(d_pos)) / 2) if d_pos.size else ceiling / 2
    for _ in range(60):
        if theta < 1e-15:
            break
        if dist_to_wall(theta) > policy.zero_tol:
            return theta
        theta /= 2.0
    raise OffsetExhausted("no admissible endpoint phase offset below the ceiling")


def _bisect_wall(path, t0, t1, p0, p1, v_ref, target, policy, iters=30):
    """Bisect a lifted-phase wall crossing inside [t0, t1]; returns (t*, vector)."""
    from .spectra import branch_value_at

    lo, hi, plo, phi_hi = t0, t1, p0, p1
    vec = v_ref
    below = p0 < target
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        raw, vmid, _ = branch_value_at(path, "unitary", mid, vec, policy)
        pred = plo + (phi_hi - plo) * (mid - lo) / max(hi - lo, 1e-300)
        lifted = raw + 2 * np.pi * np.round((pred - raw) / (2 * np.pi))
        if (lifted < target) == below:
            lo, plo, vec = mid, lifted, vmid
        else:
            hi, phi_hi = mid, lifted
        if hi - lo < 1e-9:
            break
    return (lo + hi) / 2.0, vec


def _wall_events(bs, a, policy, path=None):
    """Wall crossings of lifted branch phases; returns (offset, events list).

    Each event is (time, direction, weight) with weight = <v, a v> summed over
    branches crossing together.
    """
    endpoint_phases = np.concatenate([bs.values[0], bs.values[-1]])
    theta = pick_offset(endpoint_phases, policy)
    wall = np.pi + theta
    times, values = bs.times, bs.values
    raw = []
    for b in range(bs.n_branches):
        phi = values[:, b]
        floors = np.floor((phi - wall) / (2 * np.pi))
        for k in range(1, len(times)):
            if floors[k] == floors[k - 1]:
                continue
            direction = 1 if floors[k] > floors[k - 1] else -1
            target = wall + 2 * np.pi * (floors[k] if direction > 0 else floors[k - 1])
            t0, t1 = times[k - 1], times[k]
            p0, p1 = phi[k - 1], phi[k]
            if path is not None and abs(p1 - p0) > 1e-12:
                t_star, v = _bisect_wall(path, t0, t1, p0, p1,
                                         bs.vectors[k - 1][:, b], target, policy)
            else:
                t_star = t0 + (target - p0) / (p1 - p0) * (t1 - t0) if p1 != p0 else t0
                v = bs.vectors[k - 1][:, b]
            w = complex(np.vdot(v, a @ v))
            raw.append((float(t_star), direction, w))
    raw.sort(key=lambda e: (e[0], e[1]))
    events = []
    used = [False] * len(raw)
    for i, (t_star, direction, w) in enumerate(raw):
        if used[i]:
            continue
        used[i] = True
        weight = w
        for j in range(i + 1, len(raw)):
            if used[j]:
                continue
            tj, dj, wj = raw[j]
            if abs(tj - t_star) <= 1e-7 and dj == direction:
                used[j] = True
                weight += wj
        events.append((t_star, direction, weight))
    return theta, events


def winding_events(f, a=None, policy: TolerancePolicy = DEFAULT, K: int = 33):
    """Branch-track a unitary path and list its wall-crossing events."""
    path = _as_path(f)
    a = _check_actor(path, a, policy)
    bs = track_branches(path, "unitary", K=K, policy=policy)
    theta, events = _wall_events(bs, a, policy, path=path)
    return theta, events, bs


def winding_number(f, a=None, policy: TolerancePolicy = DEFAULT, K: int = 33) -> complex:
    """Equivariant winding number of a unitary path.

    Character-weighted signed count of eigenphase crossings through
    pi + theta; with trivial actor the value is an integer.
    """
    _, events, _ = winding_events(f, a, policy, K)
    return complex(sum(d * w for _, d, w in events))


def path_derivative(f, t, h=1e-4):
    """Fourth-order finite-difference derivative of a matrix path on [0, 1].

    Uses a centered stencil shifted to stay inside the domain, with one step
    of Richardson extrapolation when the half-step answer disagrees.
    """
    def stencil(step):
        lo = min(max(t - 2 * step, 0.0), 1.0 - 4 * step)
        ts = lo + step * np.arange(5)
        F = [np.asarray(f(x), dtype=complex) for x in ts]
        # 4th-order first-derivative weights at the node nearest t
        i = int(round((t - lo) / step))
        i = min(max(i, 0), 4)
        W = _fd_weights(i)
        return sum(w * Fk for w, Fk in zip(W, F)) / step

    d1 = stencil(h)
    d2 = stencil(h / 2)
    if opnorm(d1 - d2) > 1e-7 * max(1.0, opnorm(d2)):
        return (16 * d2 - d1) / 15.0
    return d2


def _fd_weights(i):
    # 5-point 4th-order first-derivative stencils, offset i = position of t
    table = {
        0: (-25 / 12, 4, -3, 4 / 3, -1 / 4),
        1: (-1 / 4, -5 / 6, 3 / 2, -1 / 2, 1 / 12),
        2: (1 / 12, -2 / 3, 0, 2 / 3, -1 / 12),
        3: (-1 / 12, 1 / 2, -3 / 2, 5 / 6, 1 / 4),
        4: (1 / 4, -4 / 3, 3, -4, 25 / 12),
    }
    return table[i]


def fredholm_det_path(f, a=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Equivariant Fredholm determinant exp(int_0^1 Tr(a f^{-1} f') dt)."""
    path = _as_path(f)
    a = _check_actor(path, a, policy)

    def integrand(t):
        U = np.asarray(path(t), dtype=complex)
        dU = path_derivative(path, t)
        return complex(np.trace(a @ U.conj().T @ dU))

    return complex(np.exp(integrate(integrand, 0.0, 1.0, policy)))


def winding_from_logs(f, a=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Derivative/trace-log form of the winding number for C^1 paths:

        w = (1/2 pi i) ( int Tr(a f^{-1} f') dt
                         - Tr(a Log f(1)) + Tr(a Log f(0)) )

    with principal matrix logarithms; valid when neither endpoint has
    spectrum at -1.
    """
    path = _as_path(f)
    a = _check_actor(path, a, policy)

    def integrand(t):
        U = np.asarray(path(t), dtype=complex)
        dU = path_derivative(path, t)
        return complex(np.trace(a @ U.conj().T @ dU))

    total = integrate(integrand, 0.0, 1.0, policy)
    L1 = principal_log_unitary(np.asarray(path(1.0), dtype=complex), 0.0, policy)
    L0 = principal_log_unitary(np.asarray(path(0.0), dtype=complex), 0.0, policy)
    total -= complex(np.trace(a @ L1))
    total += complex(np.trace(a @ L0))
    return complex(total / (2j * np.pi))


@dataclass
class CanonicalContraction:
    """Canonical contraction path of a unitary U under an actor a.

    The -1 eigenspace H0 of U is frozen at -a|H0; the complement flows as
    exp(t Log a~) exp(t Log U~), ending at (-a|H0) + a~ U~.
    """

    U: np.ndarray
    a: np.ndarray
    h0_basis: np.ndarray
    comp_basis: np.ndarray
    path: UnitaryPath
    diagnostics: dict = field(default_factory=dict)

    def __call__(self, t):
        return self.path(t)

    @property
    def dim(self):
        return self.U.shape[0]


def _split_at_minus_one(U, policy):
    es = eig_unitary(U, policy)
    on_cut = np.abs(np.exp(1j * es.values) + 1.0) <= max(policy.zero_tol, 1e-9) * 10
    B0 = es.vectors[:, on_cut]
    B1 = es.vectors[:, ~on_cut]
    return B0, B1


def canonical_path(U, a=None, policy: TolerancePolicy = DEFAULT) -> CanonicalContraction:
    """Path from (-a|H0) + I to (-a|H0) + a~U~ with H0 = ker(U + I)."""
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    a = np.eye(n, dtype=complex) if a is None else np.asarray(a, dtype=complex)
    if opnorm(a @ U - U @ a) > max(policy.commute_tol, 1e-9) * 10:
        raise NotCommuting("[a, U] exceeds the commutator tolerance")
    B0, B1 = _split_at_minus_one(U, policy)
    k0 = B0.shape[1]
    if k0:
        leak = opnorm((np.eye(n) - B0 @ B0.conj().T) @ a @ B0)
        if leak > max(policy.commute_tol, 1e-9) * 100:
            raise NotCommuting("actor does not preserve ker(U + I)")
    a0 = B0.conj().T @ a @ B0
    a1 = B1.conj().T @ a @ B1
    U1 = B1.conj().T @ U @ B1
    La = principal_log_unitary(a1, 0.0, policy) if B1.shape[1] else a1
    LU = principal_log_unitary(U1, 0.0, policy) if B1.shape[1] else U1
    import scipy.linalg

    def sampler(t):
        out = np.zeros((n, n), dtype=complex)
        if k0:
            out += B0 @ (-a0) @ B0.conj().T
        if B1.shape[1]:
            comp = scipy.linalg.expm(t * La) @ scipy.linalg.expm(t * LU)
            out += B1 @ comp @ B1.conj().T
        return out

    return CanonicalContraction(U=U, a=a, h0_basis=B0, comp_basis=B1,
                                path=UnitaryPath(n, sampler, name="canonical"),
                                diagnostics={"h0_dim": k0})


def double_index(U, V, a=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Equivariant double index tau(U, V) = w(f) + w(g) - w(q).

    f and g are the canonical contraction paths of U and V split along
    H0 = ker(U + I); q is the product-form path ending at (-a|H0) + a~U~V~.
    V must restrict to -I on H0 and have no further spectrum at -1
    (IncompatibleSplitting otherwise).
    """
    import scipy.linalg

    U = np.asarray(U, dtype=complex)
    V = np.asarray(V, dtype=complex)
    n = U.shape[0]
    if V.shape != U.shape:
        raise DimensionMismatch("U and V must have the same shape")
    a = np.eye(n, dtype=complex) if a is None else np.asarray(a, dtype=complex)
    for X, name in ((U, "U"), (V, "V")):
        if opnorm(a @ X - X @ a) > max(policy.commute_tol, 1e-9) * 10:
            raise NotCommuting(f"[a, {name}] exceeds the commutator tolerance")
    B0, B1 = _split_at_minus_one(U, policy)
    k0 = B0.shape[1]
    tol = max(policy.zero_tol, 1e-9) * 100
    if k0:
        if opnorm(B0.conj().T @ V @ B0 + np.eye(k0)) > max(tol, 1e-7):
            raise IncompatibleSplitting("V does not restrict to -I on ker(U + I)")
        if opnorm((np.eye(n) - B0 @ B0.conj().T) @ V @ B0) > max(tol, 1e-7):
            raise IncompatibleSplitting("V does not preserve ker(U + I)")
    V1 = B1.conj().T @ V @ B1
    if B1.shape[1]:
        ph = eig_unitary(V1, policy).values
        if np.any(np.pi - np.abs(ph) <= max(policy.zero_tol, 1e-9)):
            raise IncompatibleSplitting("ker(V + I) is not contained in ker(U + I)")
    a0 = B0.conj().T @ a @ B0
    U1 = B1.conj().T @ U @ B1
    LU = principal_log_unitary(U1, 0.0, policy) if B1.shape[1] else U1
    LV = principal_log_unitary(V1, 0.0, policy) if B1.shape[1] else V1

    # The actor enters through the crossing weights only; twisting the flows
    # by a would shift which phase lines cross the wall and break the triple
    # index algebra.  The frozen H0 block never crosses and contributes 0.
    def make(flows):
        def sampler(t):
            out = np.zeros((n, n), dtype=complex)
            if k0:
                out += B0 @ (-a0) @ B0.conj().T
            if B1.shape[1]:
                comp = np.eye(B1.shape[1], dtype=complex)
                for L in flows:
                    comp = comp @ scipy.linalg.expm(t * L)
                out += B1 @ comp @ B1.conj().T
            return out
        return UnitaryPath(n, sampler)

    wf = winding_number(make([LU]), a, policy)
    wg = winding_number(make([LV]), a, policy)
    wq = winding_number(make([LU, LV]), a, policy)
    return complex(wf + wg - wq)


def relative_double_index(f, g, a=None, policy: TolerancePolicy = DEFAULT) -> complex:
    """Relative double index of two unitary paths: w(f) + w(g) - w(fg)."""
    pf = _as_path(f)
    pg = _as_path(g)
    if pf.dim != pg.dim:
        raise DimensionMismatch("paths must share the dimension")

    def prod(t):
        return np.asarray(pf(t), dtype=complex) @ np.asarray(pg(t), dtype=complex)

    pq = UnitaryPath(pf.dim, prod, name="fg")
    wf = winding_number(pf, a, policy)
    wg = winding_number(pg, a, policy)
    wq = winding_number(pq, a, policy)
    return complex(wf + wg - wq)
