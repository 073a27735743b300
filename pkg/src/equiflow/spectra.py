"""Numerical kernel: eigendecompositions, clustering, branch tracking,
matrix functions and deterministic adaptive quadrature.

All operations are pure functions of their inputs; sums and quadrature
reductions run in a fixed sequential order.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment
from scipy.special import erf

from .errors import (
    BranchCut,
    NoConvergence,
    NotHermitian,
    NotInvariant,
    NotUnitary,
    TrackingAmbiguous,
)
from .tolerances import DEFAULT, TolerancePolicy

__all__ = [
    "EigenSystem",
    "BranchSet",
    "eig_hermitian",
    "eig_unitary",
    "weighted_trace",
    "principal_log_unitary",
    "matrix_erf",
    "integrate",
    "track_branches",
    "cluster_indices",
    "opnorm",
]


def opnorm(M):
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(np.asarray(M), 2))


def _as_matrix(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M


def _fix_phases(V, tol=1e-8):
    """Make the first non-negligible component of each column real positive."""
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        idx = np.nonzero(np.abs(col) > tol)[0]
        i = idx[0] if idx.size else int(np.argmax(np.abs(col)))
        z = col[i]
        if abs(z) > 0:
            V[:, j] = col * (abs(z) / z)
    return V


def cluster_indices(values, gap, circular=False):
    """Group sorted values into clusters separated by less than `gap`.

    Returns a list of index ranges (start, stop).  With circular=True the
    first and last cluster are merged when they touch across the 2*pi cut;
    the merged cluster is reported once with its wrapped index list.
    """
    n = len(values)
    if n == 0:
        return []
    ranges = []
    start = 0
    for i in range(1, n):
        if values[i] - values[i - 1] > gap:
            ranges.append((start, i))
            start = i
    ranges.append((start, n))
    if circular and len(ranges) > 1:
        if (values[0] + 2 * np.pi) - values[-1] <= gap:
            first = ranges.pop(0)
            last = ranges.pop()
            ranges.append((last[0], first[1] + n))  # wrapped range, indices mod n
    return ranges


@dataclass
class EigenSystem:
    """Eigendecomposition with deterministic ordering and clustering.

    values   ascending real eigenvalues (Hermitian) or phases in (-pi, pi]
    vectors  orthonormal columns, vectors[:, i] belongs to values[i]
    clusters index ranges grouped by cluster_tol (possibly wrapped for phases)
    kind     "hermitian" or "unitary"
    """

    values: np.ndarray
    vectors: np.ndarray
    clusters: list
    kind: str

    @property
    def dim(self):
        return self.values.size

    def cluster_slices(self):
        """Index arrays per cluster (handles the wrapped phase cluster)."""
        n = self.dim
        return [np.arange(a, b) % n for a, b in self.clusters]


def eig_hermitian(M, policy: TolerancePolicy = DEFAULT) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix with phase-fixed vectors."""
    M = _as_matrix(M)
    nrm = opnorm(M)
    if opnorm(M - M.conj().T) > policy.eig_tol * max(nrm, 1.0):
        raise NotHermitian(f"matrix deviates from Hermitian by more than {policy.eig_tol} * ||M||")
    H = (M + M.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(H)
    vecs = _fix_phases(vecs)
    clusters = cluster_indices(vals, policy.cluster_tol)
    return EigenSystem(values=vals, vectors=vecs, clusters=clusters, kind="hermitian")


def eig_unitary(U, policy: TolerancePolicy = DEFAULT) -> EigenSystem:
    """Eigendecomposition of a unitary matrix, phases ascending in (-pi, pi].

    A phase equals pi only when the eigenvalue is within zero_tol of -1.
    """
    U = _as_matrix(U)
    n = U.shape[0]
    if opnorm(U.conj().T @ U - np.eye(n)) > max(policy.eig_tol, 1e-10):
        raise NotUnitary("matrix is not unitary within tolerance")
    T, Q = scipy.linalg.schur(U, output="complex")
    lam = np.diag(T)
    # unitary matrices are normal: Schur vectors are eigenvectors
    phases = np.angle(lam)
    # snap genuine -1 eigenvalues to phase exactly pi, keep others off the cut
    at_minus_one = np.abs(lam + 1.0) <= policy.zero_tol
    phases = np.where(at_minus_one, np.pi, phases)
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    vecs = _fix_phases(Q[:, order])
    resid = opnorm(U @ vecs - vecs @ np.diag(np.exp(1j * phases)))
    if resid > 1e3 * policy.eig_tol * max(1.0, opnorm(U)) * n:
        raise NotUnitary(f"eigen-residual {resid:.2e} too large; matrix not normal enough")
    clusters = cluster_indices(phases, policy.cluster_tol, circular=True)
    return EigenSystem(values=phases, vectors=vecs, clusters=clusters, kind="unitary")


def weighted_trace(h, basis, policy: TolerancePolicy = DEFAULT, check_invariant=True):
    """Trace of h restricted to the subspace spanned by orthonormal `basis` columns.

    Raises NotInvariant when the subspace is not h-invariant within commute_tol.
    The value is independent of the orthonormal basis chosen for the subspace.
    """
    h = _as_matrix(h)
    B = np.asarray(basis, dtype=complex)
    if B.ndim == 1:
        B = B[:, None]
    k = B.shape[1]
    if k == 0:
        return 0.0 + 0.0j
    if opnorm(B.conj().T @ B - np.eye(k)) > max(policy.eig_tol * 10, 1e-10):
        raise ValueError("basis columns are not orthonormal")
    if check_invariant:
        proj = B @ B.conj().T
        leak = opnorm((np.eye(h.shape[0]) - proj) @ h @ proj)
        if leak > max(policy.commute_tol, 1e-10) * max(opnorm(h), 1.0) * 10:
            raise NotInvariant(f"subspace leaks under h by {leak:.2e}")
    return complex(np.trace(B.conj().T @ h @ B))


def principal_log_unitary(U, offset: float = 0.0, policy: TolerancePolicy = DEFAULT):
    """Skew-Hermitian logarithm of a unitary with branch cut rotated by `offset`.

    The eigenvalues of -i*log lie in (-pi + offset, pi + offset).  Raises
    BranchCut when spec(U * e^{-i*offset}) touches -1 within zero_tol.
    """
    es = eig_unitary(U, policy)
    # distance of each phase to the cut at pi + offset (mod 2*pi)
    rel = np.mod(es.values - offset + np.pi, 2 * np.pi) - np.pi  # in (-pi, pi]
    if np.any(np.pi - np.abs(rel) <= policy.zero_tol) or np.any(rel == np.pi):
        if offset == 0.0:
            raise BranchCut("spectrum touches -1; supply a nonzero branch offset")
        raise BranchCut(f"spectrum touches the rotated branch cut at offset {offset}")
    shifted = offset + rel
    L = es.vectors @ np.diag(1j * shifted) @ es.vectors.conj().T
    return (L - L.conj().T) / 2.0


def matrix_erf(D, policy: TolerancePolicy = DEFAULT):
    """Error function of a Hermitian matrix (same eigenvectors, erf'd eigenvalues)."""
    es = eig_hermitian(D, policy)
    out = es.vectors @ np.diag(erf(es.values)) @ es.vectors.conj().T
    return (out + out.conj().T) / 2.0


@lru_cache(maxsize=None)
def _gl_nodes(order=15):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def integrate(f, a: float, b: float, policy: TolerancePolicy = DEFAULT, max_depth: int = 20):
    """Adaptive composite Gauss-Legendre quadrature of a complex-valued sampler.

    Deterministic node order; panels are accepted when the bisection error
    estimate fits inside the panel's share of quad_rel_tol.  Raises
    NoConvergence past `max_depth` levels of refinement.
    """
    x, w = _gl_nodes()

    def panel(lo, hi):
        half = (hi - lo) / 2.0
        mid = (hi + lo) / 2.0
        vals = np.array([f(mid + half * xi) for xi in x], dtype=complex)
        return half * np.dot(w, vals), half * float(np.dot(w, np.abs(vals)))

    whole, aest = panel(a, b)
    scale = max(aest, 1e-300)
    span = b - a
    if span == 0:
        return 0.0 + 0.0j

    def rec(lo, hi, approx, depth):
        mid = (lo + hi) / 2.0
        left, _ = panel(lo, mid)
        right, _ = panel(mid, hi)
        err = abs(approx - left - right)
        if err <= policy.quad_rel_tol * scale * (hi - lo) / span or err == 0.0:
            return left + right
        if depth >= max_depth:
            raise NoConvergence(f"quadrature stalled on [{lo}, {hi}] with error {err:.2e}")
        return rec(lo, mid, left, depth + 1) + rec(mid, hi, right, depth + 1)

    return complex(rec(a, b, whole, 0))


@dataclass
class BranchSet:
    """Eigenvalue branches of a matrix path matched by eigenvector overlap.

    times    sample times (ascending, refined)
    values   (K, d) array; column j is branch j (lifted phases for unitary paths)
    vectors  list of (d, d) arrays; vectors[k][:, j] is branch j's vector at times[k]
    kind     "hermitian" or "unitary"
    """

    times: np.ndarray
    values: np.ndarray
    vectors: list
    kind: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_branches(self):
        return self.values.shape[1]


_OVERLAP_MIN = 1.0 / np.sqrt(2.0) - 1e-9


def _match(es1, vals1, es2, policy, kind):
    """Match branches of consecutive eigensystems.

    Returns (perm, vals2_matched, ok).  vals1 are the already-lifted branch
    values at the left sample (branch order); es2 raw at the right.
    """
    V1 = es1  # (d, nb) branch-ordered vectors at left sample
    O = V1.conj().T @ es2.vectors
    row, col = linear_sum_assignment(-np.abs(O))
    perm = np.empty_like(col)
    perm[row] = col
    raw2 = es2.values[perm]
    if kind == "unitary":
        lifted2 = raw2 + 2 * np.pi * np.round((vals1 - raw2) / (2 * np.pi))
        if np.max(np.abs(lifted2 - vals1)) > 0.75:
            return perm, lifted2, False
        vals2 = lifted2
    else:
        vals2 = raw2
    # cluster-blocked overlap certificate
    order = np.argsort(vals1, kind="stable")
    ok = True
    for a, b in cluster_indices(vals1[order], policy.cluster_tol * 10 + 1e-12):
        idx = order[a:b]
        block = O[np.ix_(idx, perm[idx])]
        smin = np.linalg.svd(block, compute_uv=False)[-1]
        if smin < _OVERLAP_MIN:
            ok = False
            break
    return perm, vals2, ok


def track_branches(path, kind: str, K: int = 17, policy: TolerancePolicy = DEFAULT,
                   max_samples: int = 6000, min_dt: float = 1e-11) -> BranchSet:
    """Track eigenvalue/eigenphase branches of a reentrant matrix sampler on [0, 1].

    Consecutive samples are matched by maximal-overlap assignment; intervals are
    bisected until every link certifies (cluster-blocked overlap >= 1/sqrt(2),
    and phase steps below 0.75 rad for unitary paths).
    """
    if K < 2:
        raise ValueError("K must be >= 2")
    if kind not in ("hermitian", "unitary"):
        raise ValueError("kind must be 'hermitian' or 'unitary'")
    eig = eig_hermitian if kind == "hermitian" else eig_unitary

    times = list(np.linspace(0.0, 1.0, K))
    systems = [eig(path(t), policy) for t in times]

    # iterative refinement of uncertified links
    while True:
        inserted = False
        i = 0
        while i < len(times) - 1:
            vals1 = systems[i].values
            _, _, ok = _match(systems[i].vectors, vals1, systems[i + 1], policy, kind)
            if not ok:
                if len(times) >= max_samples or times[i + 1] - times[i] <= min_dt:
                    raise TrackingAmbiguous(
                        f"branch matching uncertified near t={times[i]:.6g} at depth cap")
                tm = (times[i] + times[i + 1]) / 2.0
                times.insert(i + 1, tm)
                systems.insert(i + 1, eig(path(tm), policy))
                inserted = True
            else:
                i += 1
        if not inserted:
            break

    # stitch branches through the certified chain
    d = systems[0].dim
    nb = d
    values = np.empty((len(times), nb))
    vectors = []
    values[0] = systems[0].values
    vectors.append(systems[0].vectors)
    cur_vals = values[0].copy()
    cur_vecs = vectors[0]
    for k in range(1, len(times)):
        perm, vals2, ok = _match(cur_vecs, cur_vals, systems[k], policy, kind)
        values[k] = vals2
        cur_vals = vals2
        cur_vecs = systems[k].vectors[:, perm]
        vectors.append(cur_vecs)

    return BranchSet(times=np.asarray(times), values=values, vectors=vectors, kind=kind,
                     diagnostics={"n_samples": len(times)})


def branch_value_at(path, kind, t, v_ref, policy: TolerancePolicy = DEFAULT):
    """Value and vector of the branch closest (by overlap with v_ref) at time t."""
    eig = eig_hermitian if kind == "hermitian" else eig_unitary
    es = eig(path(t), policy)
    ov = np.abs(v_ref.conj() @ es.vectors)
    j = int(np.argmax(ov))
    return es.values[j], es.vectors[:, j], es
