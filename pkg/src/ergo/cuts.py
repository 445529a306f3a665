"""Expansion, conductance, spectral gaps and cut profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import CapacityError, InputError, OracleViolation
from .graph import Graph, is_connected

BRUTE_MAX_N = 24
DENSE_MAX_N = 2048
DENSE_TOL = 1e-9
ITERATIVE_TOL = 1e-6
EXHAUSTIVE_PROFILE_MAX_U = 12


@numba.njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@numba.njit(cache=True)
def _better(num, den, mask, best_num, best_den, best_mask):
    # exact rational comparison num/den < best_num/best_den, ties to the smaller mask
    lhs = num * best_den
    rhs = best_num * den
    return lhs < rhs or (lhs == rhs and mask < best_mask)


@numba.njit(cache=True)
def _enumerate_cuts(n, masks, deg, m):
    """Gray-code walk over all vertex subsets with O(1) crossing updates."""
    half = n // 2
    phi_num, phi_den, phi_mask = 1, 0, -1  # 1/0 acts as +infinity
    cond_num, cond_den, cond_mask = 1, 0, -1
    min_cross = np.full(n + 1, -1, dtype=np.int64)
    s = 0
    size = 0
    cross = 0
    vol = 0
    for i in range(1, 1 << n):
        v = 0
        while not (i >> v) & 1:
            v += 1
        bit = 1 << v
        if s & bit:
            s ^= bit
            cross -= deg[v] - 2 * _popcount(masks[v] & s)
            size -= 1
            vol -= deg[v]
        else:
            cross += deg[v] - 2 * _popcount(masks[v] & s)
            s |= bit
            size += 1
            vol += deg[v]
        if min_cross[size] < 0 or cross < min_cross[size]:
            min_cross[size] = cross
        if size <= half and _better(cross, size, s, phi_num, phi_den, phi_mask):
            phi_num, phi_den, phi_mask = cross, size, s
        if 0 < vol <= m and _better(cross, vol, s, cond_num, cond_den, cond_mask):
            cond_num, cond_den, cond_mask = cross, vol, s
    return phi_num, phi_den, phi_mask, cond_num, cond_den, cond_mask, min_cross


def _mask_to_list(mask: int, n: int) -> list[int]:
    return [v for v in range(n) if (mask >> v) & 1]


@dataclass(frozen=True)
class BruteCuts:
    phi: float
    phi_witness: list[int]
    Phi: float
    Phi_witness: list[int]
    min_crossing_by_size: list[int]


def brute_cuts(g: Graph) -> BruteCuts:
    """Exact expansion and conductance by enumerating all ``2^n`` subsets (``n <= 24``)."""
    if g.n > BRUTE_MAX_N:
        raise CapacityError(f"exhaustive cut enumeration needs n <= {BRUTE_MAX_N}, got {g.n}")
    if g.n < 1:
        raise InputError("graph must have at least one vertex")
    masks = np.array(g.adjacency_masks(), dtype=np.int64)
    deg = g.degrees()
    pn, pd, pm, cn, cd, cm, mc = _enumerate_cuts(g.n, masks, deg, g.edge_count)
    phi = pn / pd if pd else math.inf
    Phi = cn / cd if cd else math.inf
    return BruteCuts(
        phi,
        _mask_to_list(int(pm), g.n) if pd else [],
        Phi,
        _mask_to_list(int(cm), g.n) if cd else [],
        [int(x) for x in mc],
    )


def brute_expansion(g: Graph) -> tuple[float, list[int]]:
    """``min e(U, U^c) / |U|`` over nonempty ``|U| <= n/2``; ties go to the smallest bitmask."""
    r = brute_cuts(g)
    return r.phi, r.phi_witness


def brute_conductance(g: Graph) -> tuple[float, list[int]]:
    """``min e(U, U^c) / Vol(U)`` over nonempty ``U`` with ``0 < Vol(U) <= E``."""
    if g.edge_count == 0:
        raise InputError("conductance is undefined for an edgeless graph")
    r = brute_cuts(g)
    return r.Phi, r.Phi_witness


# -- spectra --------------------------------------------------------------------------
def laplacian(g: Graph):
    a = g.sparse_adjacency()
    return sp.diags(g.degrees().astype(np.float64)) - a


def lambda2_laplacian(g: Graph) -> float:
    """Second-smallest eigenvalue of ``L = D - A``."""
    if g.n < 2:
        raise InputError("lambda_2 needs at least two vertices")
    if g.n <= DENSE_MAX_N:
        a = g.adjacency_matrix()
        lap = np.diag(a.sum(axis=1)) - a
        return float(np.linalg.eigvalsh(lap)[1])
    # top eigenvalue of c I - L with the all-ones direction projected out
    lap = laplacian(g).tocsr()
    n = g.n
    c = 2.0 * float(g.degrees().max()) + 1.0

    def matvec(x):
        x = np.ravel(x)
        y = c * x - lap @ x
        return y - c * x.mean()

    op = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    top = eigsh(op, k=1, which="LA", tol=ITERATIVE_TOL * 1e-3, return_eigenvectors=False)[0]
    return float(c - top)


def lambda2_walk(g: Graph) -> float:
    """Second-largest eigenvalue of ``P = D^-1 A`` via the symmetric ``D^-1/2 A D^-1/2``."""
    deg = g.degrees().astype(np.float64)
    if g.n < 2:
        raise InputError("lambda_2 needs at least two vertices")
    if (deg == 0).any():
        raise InputError("random-walk spectrum needs every vertex to have degree >= 1")
    inv = 1.0 / np.sqrt(deg)
    if g.n <= DENSE_MAX_N:
        s = g.adjacency_matrix() * inv[:, None] * inv[None, :]
        return float(np.linalg.eigvalsh(s)[-2])
    s = sp.diags(inv) @ g.sparse_adjacency() @ sp.diags(inv)
    top = np.sqrt(deg) / math.sqrt(deg.sum())

    def matvec(x):
        x = np.ravel(x)
        # push the known top eigenvector (eigenvalue 1) down to -2, below the rest
        return s @ x - 3.0 * top * (top @ x)

    op = LinearOperator((g.n, g.n), matvec=matvec, dtype=np.float64)
    return float(eigsh(op, k=1, which="LA", tol=ITERATIVE_TOL * 1e-3, return_eigenvectors=False)[0])


@dataclass(frozen=True)
class SpectralReport:
    phi: float
    phi_witness: list[int]
    Phi: float
    Phi_witness: list[int]
    lambda2_L: float
    lambda2_P: float
    d_max: int
    laplacian_lower: float
    laplacian_upper: float
    walk_gap: float
    walk_lower: float
    walk_upper: float
    walk_upper_tight: float
    walk_upper_tight_holds: bool
    eig_tolerance: float
    violations: list[str] = field(default_factory=list)


def cheeger_report(g: Graph, strict: bool = True) -> SpectralReport:
    """Exact ``phi`` / ``Phi`` next to both spectral gaps and the Cheeger-type sandwiches.

    Checked bounds: ``phi^2 / (2 d_max) <= lambda_2(L) <= 2 phi`` and
    ``Phi^2 / 8 <= 1 - lambda_2(P) <= 2 Phi``.  The tighter upper bound
    ``1 - lambda_2(P) <= Phi`` is evaluated and reported but not enforced, since
    it already fails on the 6-cycle.  With ``strict`` a violated enforced bound
    raises :class:`OracleViolation`.
    """
    if not is_connected(g) or g.n < 2:
        raise InputError("cheeger_report needs a connected graph with at least two vertices")
    cuts = brute_cuts(g)
    l2 = lambda2_laplacian(g)
    p2 = lambda2_walk(g)
    d_max = int(g.degrees().max())
    tol = DENSE_TOL if g.n <= DENSE_MAX_N else ITERATIVE_TOL
    gap = 1.0 - p2
    lap_lo = cuts.phi**2 / (2 * d_max)
    lap_hi = 2 * cuts.phi
    walk_lo = cuts.Phi**2 / 8
    walk_hi = 2 * cuts.Phi
    violations = []
    if lap_lo > l2 + tol:
        violations.append("phi^2/(2 d_max) <= lambda2_L")
    if l2 > lap_hi + tol:
        violations.append("lambda2_L <= 2 phi")
    if walk_lo > gap + tol:
        violations.append("Phi^2/8 <= 1 - lambda2_P")
    if gap > walk_hi + tol:
        violations.append("1 - lambda2_P <= 2 Phi")
    report = SpectralReport(
        phi=cuts.phi,
        phi_witness=cuts.phi_witness,
        Phi=cuts.Phi,
        Phi_witness=cuts.Phi_witness,
        lambda2_L=l2,
        lambda2_P=p2,
        d_max=d_max,
        laplacian_lower=lap_lo,
        laplacian_upper=lap_hi,
        walk_gap=gap,
        walk_lower=walk_lo,
        walk_upper=walk_hi,
        walk_upper_tight=cuts.Phi,
        walk_upper_tight_holds=gap <= cuts.Phi + tol,
        eig_tolerance=tol,
        violations=violations,
    )
    if strict and violations:
        raise OracleViolation(f"Cheeger bounds violated: {', '.join(violations)}")
    return report


# -- cut profile ------------------------------------------------------------------------
@dataclass(frozen=True)
class CutProfile:
    c: float
    size_buckets: list[int]
    min_ratio: list[float]
    samples_per_bucket: int
    exhaustive: list[bool]
    empirical_delta: float


def size_buckets(n: int) -> list[int]:
    half = n // 2
    out = []
    u = 1
    while u <= half:
        out.append(u)
        u *= 2
    if half >= 1 and out[-1] != half:
        out.append(half)
    return out


def _sampled_min_crossing(g: Graph, u: int, trials: int, rng: np.random.Generator) -> int:
    a = g.sparse_adjacency()
    deg = g.degrees().astype(np.float64)
    x = np.zeros((trials, g.n))
    for t in range(trials):
        x[t, rng.choice(g.n, size=u, replace=False)] = 1.0
    vol = x @ deg
    twice_internal = np.einsum("ij,ij->i", np.asarray((a @ x.T).T), x)
    return int(round(float((vol - twice_internal).min())))


def cut_profile(g: Graph, c: float, trials: int, rng: np.random.Generator) -> CutProfile:
    """Smallest sampled ``e(U, U^c) / (u c ln n)`` for subset sizes ``u = 1, 2, 4, ..., n/2``.

    Small sizes on small graphs (``u <= 12``, ``n <= 24``) are minimised
    exhaustively instead.  ``empirical_delta`` is one minus the overall minimum.
    """
    if g.n < 4:
        raise InputError("cut_profile needs n >= 4")
    if c <= 0 or trials < 1:
        raise InputError("c must be positive and trials >= 1")
    scale = c * math.log(g.n)
    buckets = size_buckets(g.n)
    exact = brute_cuts(g).min_crossing_by_size if g.n <= BRUTE_MAX_N else None
    ratios = []
    exhaustive = []
    for u in buckets:
        if exact is not None and u <= EXHAUSTIVE_PROFILE_MAX_U:
            cross = exact[u]
            exhaustive.append(True)
        else:
            cross = _sampled_min_crossing(g, u, trials, rng)
            exhaustive.append(False)
        ratios.append(cross / (u * scale))
    return CutProfile(c, buckets, ratios, trials, exhaustive, 1.0 - min(ratios))
