"""Equivariant spectral flow of Hermitian paths.

Two independent pipelines: a grid-partition computation (spectral-window
traces over a certified partition) and a crossing oracle (branch tracking
plus bisection of zero crossings).  The spectral window is closed at 0; an
eigenvalue within zero_tol of 0 at an endpoint of [0, 1] counts as
nonnegative.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotEquivariant, PartitionFailure
from .spectra import (
    branch_value_at,
    eig_hermitian,
    opnorm,
    track_branches,
    weighted_trace,
)
from .tolerances import DEFAULT, TolerancePolicy

__all__ = [
    "HermitianPath",
    "UnitaryPath",
    "GridPartition",
    "FlowResult",
    "Crossing",
    "good_partition",
    "spectral_flow",
    "crossing_oracle",
    "bott_loop",
    "BottLoop",
    "concatenate",
    "reverse",
]


@dataclass
class HermitianPath:
    """Reentrant sampler t in [0, 1] -> Hermitian matrix.

    `symmetry`, when set, is the commuting group element the path is meant
    to be evaluated against (kept with the path for bookkeeping only).
    """

    dim: int
    sampler: callable
    name: str = "hermitian_path"
    symmetry: object = None

    def __call__(self, t):
        return self.sampler(t)


@dataclass
class UnitaryPath:
    """Reentrant sampler t in [0, 1] -> unitary matrix."""

    dim: int
    sampler: callable
    name: str = "unitary_path"
    symmetry: object = None

    def __call__(self, t):
        return self.sampler(t)


def concatenate(p1, p2, cls=None):
    """Concatenation (p1 * p2)(t): p1 on [0, 1/2], p2 on [1/2, 1]."""
    if p1.dim != p2.dim:
        raise DimensionMismatch("concatenated paths must share the dimension")
    cls = cls or type(p1)

    def sampler(t):
        return p1.sampler(2 * t) if t <= 0.5 else p2.sampler(2 * t - 1)

    return cls(dim=p1.dim, sampler=sampler, name=f"{p1.name}*{p2.name}")


def reverse(p):
    return type(p)(dim=p.dim, sampler=lambda t: p.sampler(1.0 - t), name=f"rev({p.name})")


@dataclass
class Interval:
    t0: float
    t1: float
    level: float
    margin: float
    lipschitz: float


@dataclass
class GridPartition:
    """Certified partition: per interval a level a_j avoided by the spectrum."""

    intervals: list

    @property
    def nodes(self):
        ts = [iv.t0 for iv in self.intervals]
        ts.append(self.intervals[-1].t1)
        return ts

    def refine(self):
        """Halve every interval, keeping each half's parent level (still valid)."""
        out = []
        for iv in self.intervals:
            tm = (iv.t0 + iv.t1) / 2.0
            out.append(Interval(iv.t0, tm, iv.level, iv.margin, iv.lipschitz))
            out.append(Interval(tm, iv.t1, iv.level, iv.margin, iv.lipschitz))
        return GridPartition(out)


@dataclass
class Crossing:
    time: float
    direction: int
    dim: int
    weight: complex


@dataclass
class FlowResult:
    value: complex
    contributions: list = field(default_factory=list)
    crossings: list = None
    diagnostics: dict = field(default_factory=dict)


def _check_equivariant(path, h, ts, policy):
    if h is None:
        return
    h = np.asarray(h, dtype=complex)
    for t in ts:
        B = np.asarray(path(t), dtype=complex)
        if opnorm(h @ B - B @ h) > max(policy.commute_tol, 1e-9) * max(opnorm(B), 1.0) * 10:
            raise NotEquivariant(f"[h, B({t})] exceeds the commutator tolerance")


def _level_candidates(pool):
    """Candidate levels (midpoints of positive spectral gaps), best first.

    Gaps at or below the median positive eigenvalue are preferred (widest
    first); a level above the whole sampled spectrum is kept as a sound
    fallback (the window then counts every nonnegative eigenvalue).
    """
    pts = np.unique(pool)
    pos = pts[pts > 0]
    cands = []
    prev = 0.0
    for p in pos:
        if p > prev:
            cands.append(((prev + p) / 2.0, (p - prev) / 2.0))
        prev = p
    top = float(pts.max()) if pts.size else 0.0
    cands.append((max(top, 0.0) + 1.0, 1.0))
    med = float(np.median(pos)) if pos.size else np.inf
    cands.sort(key=lambda c: (0 if c[0] <= med else 1, -c[1]))
    return cands


def good_partition(path, policy: TolerancePolicy = DEFAULT, initial_nodes: int = 9,
                   max_depth: int = 22) -> GridPartition:
    """Uniform seeding then local bisection until every interval certifies.

    An interval [t0, t1] certifies with level a when the sampled spectra stay
    farther from a than the local Lipschitz bound allows them to move between
    samples.  Levels are picked in the widest spectral gap inside
    (0, median positive eigenvalue].
    """
    n_probe = 5

    def try_certify(t0, t1, depth):
        ts = np.linspace(t0, t1, n_probe)
        mats = [np.asarray(path(t), dtype=complex) for t in ts]
        spectra = [np.linalg.eigvalsh((M + M.conj().T) / 2) for M in mats]
        lip = 0.0
        for k in range(len(ts) - 1):
            dt = ts[k + 1] - ts[k]
            lip = max(lip, opnorm(mats[k + 1] - mats[k]) / max(dt, 1e-300))
        lip *= 1.5  # safety factor on the sampled Lipschitz estimate
        pool = np.concatenate(spectra)
        travel = lip * (t1 - t0) / (n_probe - 1) / 2.0
        for a, _halfwidth in _level_candidates(pool)[:4]:
            dmin = min(float(np.min(np.abs(s - a))) for s in spectra)
            if dmin > travel * 1.2 + policy.zero_tol:
                return Interval(t0, t1, a, dmin, lip)
        return None

    intervals = []
    seeds = np.linspace(0.0, 1.0, initial_nodes)
    stack = [(seeds[i], seeds[i + 1], 0) for i in range(initial_nodes - 1)]
    while stack:
        t0, t1, depth = stack.pop(0)
        iv = try_certify(t0, t1, depth)
        if iv is not None:
            intervals.append(iv)
            continue
        if depth >= max_depth:
            raise PartitionFailure(
                f"no certified level found on [{t0:.6g}, {t1:.6g}] at depth {depth}")
        tm = (t0 + t1) / 2.0
        stack.insert(0, (tm, t1, depth + 1))
        stack.insert(0, (t0, tm, depth + 1))
    intervals.sort(key=lambda iv: iv.t0)
    return GridPartition(intervals)


def _window_trace(path, t, level, h, policy, t_lo=0.0, t_hi=1.0):
    """Tr(h | eigenvalues of B(t) in [0, level]), dodging interior kernels."""
    B = np.asarray(path(t), dtype=complex)
    es = eig_hermitian(B, policy)
    shift = 10 * policy.zero_tol
    if t_lo < t < t_hi and np.min(np.abs(es.values)) <= policy.zero_tol:
        # interior node sits on a kernel: nudge it
        for tt in (t + shift, t - shift, t + 10 * shift, t - 10 * shift):
            if t_lo < tt < t_hi:
                es2 = eig_hermitian(np.asarray(path(tt), dtype=complex), policy)
                if np.min(np.abs(es2.values)) > policy.zero_tol:
                    es = es2
                    break
    mask = (es.values >= -policy.zero_tol) & (es.values <= level)
    if not np.any(mask):
        return 0.0 + 0.0j
    basis = es.vectors[:, mask]
    if h is None:
        return complex(basis.shape[1])
    return weighted_trace(h, basis, policy, check_invariant=False)


def spectral_flow(path, h=None, partition: GridPartition = None,
                  policy: TolerancePolicy = DEFAULT) -> FlowResult:
    """Equivariant spectral flow over a certified grid partition.

    Sum over intervals of Tr(h|E_j(t_j)) - Tr(h|E_j(t_{j-1})) with
    E_j(t) the span of eigenvectors with eigenvalue in [0, a_j].  The value
    is invariant under partition refinement; with h = I it is the classical
    integer spectral flow.
    """
    if partition is None:
        partition = good_partition(path, policy)
    _check_equivariant(path, h, [iv.t0 for iv in partition.intervals] + [1.0], policy)
    contributions = []
    total = 0.0 + 0.0j
    for iv in partition.intervals:
        hi = _window_trace(path, iv.t1, iv.level, h, policy)
        lo = _window_trace(path, iv.t0, iv.level, h, policy)
        c = hi - lo
        contributions.append(c)
        total += c
    return FlowResult(value=total, contributions=contributions,
                      diagnostics={"n_intervals": len(partition.intervals)})


def _bisect_zero(path, t_lo, t_hi, v_ref, val_lo, policy, iters=40):
    """Locate a sign change of a tracked branch value inside [t_lo, t_hi]."""
    lo, hi = t_lo, t_hi
    s_lo = np.sign(val_lo)
    vec = v_ref
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        val, vec_mid, _ = branch_value_at(path, "hermitian", mid, vec, policy)
        if np.sign(val) == s_lo or val == 0.0:
            lo = mid
            vec = vec_mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    return (lo + hi) / 2.0


def crossing_oracle(path, h=None, K: int = 33, policy: TolerancePolicy = DEFAULT) -> FlowResult:
    """Independent spectral-flow oracle: track branches, bisect zero crossings,
    sum direction-signed character weights of the crossing clusters."""
    _check_equivariant(path, h, (0.0, 0.5, 1.0), policy)
    bs = track_branches(path, "hermitian", K=K, policy=policy)
    times, values = bs.times, bs.values
    band = policy.zero_tol
    events = []  # (time, direction, branch index)
    for b in range(bs.n_branches):
        vals = values[:, b]
        # state at t=0: zero counts as nonnegative
        prev_sign = 1 if vals[0] >= -band else -1
        prev_idx = 0
        for k in range(1, len(times)):
            v = vals[k]
            here = 0 if abs(v) <= band else (1 if v > 0 else -1)
            if here == 0:
                if k == len(times) - 1 and prev_sign < 0:
                    events.append((times[k], +1, b))  # reaches 0 at t=1 from below
                continue
            if here != prev_sign:
                if abs(vals[prev_idx]) <= band:
                    t_star = times[prev_idx]
                else:
                    t_star = _bisect_zero(path, times[prev_idx], times[k],
                                          bs.vectors[prev_idx][:, b], vals[prev_idx], policy)
                events.append((t_star, here, b))
            prev_sign = here
            prev_idx = k
    # group events by (time, direction) so degenerate crossings form one cluster
    events.sort(key=lambda e: (e[0], e[1]))
    groups = []
    used = [False] * len(events)
    for i, e in enumerate(events):
        if used[i]:
            continue
        used[i] = True
        grp = [e]
        for j in range(i + 1, len(events)):
            if not used[j] and abs(events[j][0] - e[0]) <= 1e-8 and events[j][1] == e[1]:
                used[j] = True
                grp.append(events[j])
        groups.append(grp)
    crossings = []
    total = 0.0 + 0.0j
    for group in groups:
        t_star, direction, _ = group[0]
        es = eig_hermitian(np.asarray(path(t_star), dtype=complex), policy)
        scale = max(np.max(np.abs(es.values)), 1.0)
        near = np.abs(es.values) <= max(100 * band, 1e-7 * scale)
        if not np.any(near):
            near = np.abs(es.values) == np.min(np.abs(es.values))
        basis = es.vectors[:, near]
        k_exp = len(group)
        if basis.shape[1] > k_exp:
            # opposite-direction partner shares the cluster: weight only this
            # direction's share via the branch vectors
            w = 0.0 + 0.0j
            for (_, _, b) in group:
                idx = int(np.argmin(np.abs(times - t_star)))
                v = bs.vectors[idx][:, b]
                w += complex(np.vdot(v, (h @ v) if h is not None else v))
        else:
            w = (weighted_trace(h, basis, policy, check_invariant=False)
                 if h is not None else complex(basis.shape[1]))
        total += direction * w
        crossings.append(Crossing(time=float(t_star), direction=int(direction),
                                  dim=int(k_exp), weight=w))
    crossings.sort(key=lambda c: c.time)
    return FlowResult(value=total, crossings=crossings,
                      diagnostics={"n_samples": len(times)})


@dataclass
class BottLoop:
    """Loop B_k(t) = P+ - P- + 2t P_k and its unitary image -exp(i pi B_k(t))."""

    h: np.ndarray
    hermitian_path: HermitianPath
    unitary_path: UnitaryPath
    expected: complex


def bott_loop(rank_k_weights, ambient, policy: TolerancePolicy = DEFAULT) -> BottLoop:
    """Generator loops of the flow group.

    rank_k_weights: character values of h on the k-dimensional perturbation
    space V_k (placed on the leading coordinates of the negative block);
    ambient = (n_plus, n_minus).  The Hermitian loop has spectral flow
    sum(rank_k_weights); the unitary loop -exp(i pi B(t)) equals exp(2 pi i t)
    on V_k and the identity elsewhere.
    """
    n_plus, n_minus = ambient
    k = len(rank_k_weights)
    if k > n_minus:
        raise DimensionMismatch(f"rank {k} exceeds the negative block {n_minus}")
    dim = n_plus + n_minus
    hdiag = np.ones(dim, dtype=complex)
    for i, w in enumerate(rank_k_weights):
        hdiag[n_plus + i] = w
    h = np.diag(hdiag)
    base = np.concatenate([np.ones(n_plus), -np.ones(n_minus)])
    bump = np.zeros(dim)
    bump[n_plus:n_plus + k] = 2.0

    def herm(t):
        return np.diag(base + t * bump).astype(complex)

    def unit(t):
        return np.diag(-np.exp(1j * np.pi * (base + t * bump)))

    return BottLoop(h=h,
                    hermitian_path=HermitianPath(dim, herm, name="bott_B"),
                    unitary_path=UnitaryPath(dim, unit, name="bott_W"),
                    expected=complex(np.sum(np.asarray(rank_k_weights, dtype=complex))))
