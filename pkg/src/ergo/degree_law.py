"""The tilted degree law ``P(D = j) ∝ exp(-beta j^2 + gamma j ln n) / j!``.

Everything here works in natural logarithms and in log space; ``F`` itself is
only exponentiated on output.  The law is the per-node marginal that, once
conditioned on the degree total, reproduces the degree-sequence distribution of
the squared-degree exponential random graph up to the simple-graph probability
factor handled in :mod:`ergo.config_model`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp

from .errors import InputError, NumericError
from .graph import DegreeSequence

MOMENT_REL_CUTOFF = 1e-16
MOMENT_MAX_TERMS = 1_000_000
PSI_TAIL_EXPONENT = 40.0  # window half-width R satisfies beta * R^2 >= 40 (+ margin)
CONDITIONED_FALLBACK_FACTOR = 100
EXCHANGE_SWEEPS = 10
_DRAW_BUDGET = 2_000_000  # uniforms per rejection batch


def target_total(c: float, n: float) -> int:
    """Even degree total ``2 * round(c n ln n / 2)`` (half-up) used in place of ``c n ln n``."""
    return 2 * math.floor(c * n * math.log(n) / 2 + 0.5)


def x_gamma(beta: float, gamma: float, n: float) -> float:
    """Closed-form location ``(gamma ln n + ln ln n + gamma / 2beta) / 2beta`` of the mode."""
    if beta <= 0:
        raise InputError("beta must be positive")
    if n < 2:
        raise InputError("n must be at least 2 (ln ln n undefined)")
    L = math.log(n)
    return (gamma * L + math.log(L) + gamma / (2 * beta)) / (2 * beta)


def _h_log(s: float, beta: float, gamma: float, L: float) -> float:
    # mode equation in s = ln(x + 1): strictly decreasing on the whole real line
    return -s - (2 * math.exp(s) - 1) * beta + gamma * L


def x_gamma_exact(beta: float, gamma: float, n: float) -> float:
    """Root on ``(-1, inf)`` of ``-ln(x+1) - (2x+1) beta + gamma ln n``."""
    if beta <= 0:
        raise InputError("beta must be positive")
    if n < 2:
        raise InputError("n must be at least 2")
    L = math.log(n)
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if _h_log(lo, beta, gamma, L) > 0:
            break
        lo *= 2
    for _ in range(200):
        if _h_log(hi, beta, gamma, L) < 0:
            break
        hi *= 2
    else:  # pragma: no cover
        raise NumericError("could not bracket the mode equation")
    s = brentq(_h_log, lo, hi, args=(beta, gamma, L), xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return math.expm1(s)


def _log_f(j, beta: float, gamma: float, L: float):
    j = np.asarray(j, dtype=np.float64)
    return -beta * j * j + gamma * L * j - gammaln(j + 1)


def _mode(beta: float, gamma: float, L: float, x_root: float) -> int:
    """Smallest ``j >= 0`` with ``f(j+1)/f(j) <= 1``."""

    def log_ratio(j: int) -> float:
        return -(2 * j + 1) * beta + gamma * L - math.log(j + 1)

    j = max(0, math.floor(x_root))
    while log_ratio(j) > 0:
        j += 1
    while j > 0 and log_ratio(j - 1) <= 0:
        j -= 1
    return j


@dataclass(frozen=True)
class DegreeLawParams:
    beta: float
    gamma: float
    n: float
    c: float | None
    log_F: float
    x_gamma: float
    x_gamma_closed: float
    k_gamma: int
    alpha: float
    window: int

    @property
    def F(self) -> float:
        return _exp_or_inf(self.log_F)

    @property
    def log_n(self) -> float:
        return math.log(self.n)

    def support(self) -> np.ndarray:
        return np.arange(self.window + 1)

    def probabilities(self) -> np.ndarray:
        """pmf over ``0..window`` (the tail beyond carries less than ``1e-17`` mass)."""
        p = np.exp(_log_f(self.support(), self.beta, self.gamma, self.log_n) - self.log_F)
        return p / p.sum()


def truncation_window(beta: float, k: int) -> int:
    return k + math.ceil(math.sqrt(PSI_TAIL_EXPONENT / beta)) + 10


def make_params(beta: float, gamma: float, n: float, c: float | None = None) -> DegreeLawParams:
    if beta <= 0:
        raise InputError("beta must be positive")
    if n < 2:
        raise InputError("n must be at least 2")
    L = math.log(n)
    xr = x_gamma_exact(beta, gamma, n)
    k = _mode(beta, gamma, L, xr)
    window = truncation_window(beta, k)
    log_F = float(logsumexp(_log_f(np.arange(window + 1), beta, gamma, L)))
    if not math.isfinite(log_F):
        raise NumericError(f"normaliser is not finite for beta={beta}, gamma={gamma}, n={n}")
    alpha = 2 * beta * (xr - k + 0.5)
    return DegreeLawParams(
        beta=float(beta),
        gamma=float(gamma),
        n=n,
        c=c,
        log_F=log_F,
        x_gamma=xr,
        x_gamma_closed=x_gamma(beta, gamma, n),
        k_gamma=k,
        alpha=alpha,
        window=window,
    )


def log_pmf(j, params: DegreeLawParams):
    return _log_f(j, params.beta, params.gamma, params.log_n) - params.log_F


def pmf(j, params: DegreeLawParams):
    out = np.exp(log_pmf(j, params))
    return float(out) if np.ndim(out) == 0 else out


class Moments(NamedTuple):
    F: float
    mean: float
    variance: float
    log_F: float


def _exp_or_inf(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def moments(params: DegreeLawParams) -> Moments:
    """Return ``(F, mean, variance)`` by direct summation from ``j = 0``.

    Terms are scaled by the modal term and summation stops once past the mode
    a term drops below ``1e-16`` of the running sum.  ``F`` overflows doubles
    for large ``gamma ln n``; ``log_F`` is always finite.
    """
    beta, gamma, L = params.beta, params.gamma, params.log_n
    log_fk = float(_log_f(params.k_gamma, beta, gamma, L))
    weights = []
    total = 0.0
    j = 0
    while True:
        if j >= MOMENT_MAX_TERMS:
            raise NumericError("moment series did not converge")
        w = math.exp(float(_log_f(j, beta, gamma, L)) - log_fk)
        weights.append(w)
        total += w
        if j > params.k_gamma and w < MOMENT_REL_CUTOFF * total:
            break
        j += 1
    w = np.array(weights)
    js = np.arange(len(w), dtype=np.float64)
    mean = float(np.dot(js, w) / total)
    var = float(np.dot((js - mean) ** 2, w) / total)
    log_F = log_fk + math.log(total)
    return Moments(_exp_or_inf(log_F), mean, var, log_F)


def psi(theta: float, beta: float) -> float:
    """Moment generating function at ``theta`` of the discrete Gaussian ``∝ exp(-beta j^2)`` on Z."""
    if beta <= 0:
        raise InputError("beta must be positive")
    R = math.ceil(math.sqrt(PSI_TAIL_EXPONENT / beta)) + 2
    centre = theta / (2 * beta)
    j = np.arange(math.floor(centre) - R, math.ceil(centre) + R + 1, dtype=np.float64)
    j0 = np.arange(-R, R + 1, dtype=np.float64)
    return float(np.exp(logsumexp(theta * j - beta * j * j) - logsumexp(-beta * j0 * j0)))


def calibrate_gamma(beta: float, c: float, n: float, max_expansions: int = 60) -> DegreeLawParams:
    """Find the tilt ``gamma`` with ``E[D] = c ln n`` to within ``1e-6``.

    The mean is increasing in ``gamma``, so a bracket grown geometrically around
    the closed-form guess (the ``gamma`` placing ``x_gamma`` at ``c ln n``) is
    refined by a bracketing root finder.
    """
    if beta <= 0 or c <= 0:
        raise InputError("beta and c must be positive")
    if n < 3:
        raise InputError("n must be at least 3")
    L = math.log(n)
    target = c * L
    gamma0 = (2 * beta * target - math.log(L)) / (L + 1 / (2 * beta))

    def excess(g: float) -> float:
        return moments(make_params(beta, g, n)).mean - target

    step = 1.0
    lo, hi = gamma0 - step, gamma0 + step
    for _ in range(max_expansions):
        flo, fhi = excess(lo), excess(hi)
        if flo < 0 < fhi:
            break
        if flo >= 0:
            lo -= step
        if fhi <= 0:
            hi += step
        step *= 2
    else:
        raise NumericError(f"could not bracket gamma for beta={beta}, c={c}, n={n}")
    gamma = brentq(excess, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    params = make_params(beta, gamma, n, c)
    if abs(moments(params).mean - target) > 1e-6:
        raise NumericError("calibrated mean misses the target by more than 1e-6")
    return params


# -- conditioned sampling ------------------------------------------------------------
@dataclass(frozen=True)
class ConditioningStats:
    attempts: int
    accepted: int

    @property
    def rate(self) -> float:
        return self.accepted / self.attempts if self.attempts else 0.0


def _row_sums(cdf: np.ndarray, rng: np.random.Generator, rows: int, n: int) -> np.ndarray:
    u = rng.random((rows, n))
    return np.searchsorted(cdf, u, side="right").sum(axis=1)


def _cdf(params: DegreeLawParams) -> np.ndarray:
    cdf = np.cumsum(params.probabilities())
    cdf[-1] = 1.0
    return cdf


def _node_count(params: DegreeLawParams) -> int:
    n = int(round(params.n))
    if n < 1:
        raise InputError("params.n must be a positive node count")
    return n


def rejection_draw(params, total, rng, max_attempts):
    """Draw i.i.d. rows until one sums to ``total``; return ``(row or None, attempts)``."""
    n = _node_count(params)
    cdf = _cdf(params)
    cap = max(1, _DRAW_BUDGET // n)
    batch = min(cap, 64)
    attempts = 0
    while attempts < max_attempts:
        rows = min(batch, max_attempts - attempts)
        batch = min(cap, 2 * batch)
        u = rng.random((rows, n))
        draws = np.searchsorted(cdf, u, side="right")
        hits = np.flatnonzero(draws.sum(axis=1) == total)
        if hits.size:
            first = int(hits[0])
            return draws[first].astype(np.int64), attempts + first + 1
        attempts += rows
    return None, attempts


def exchange_chain(degrees: np.ndarray, params, total, rng, sweeps: int = EXCHANGE_SWEEPS) -> np.ndarray:
    """Repair the sum with ±1 moves, then mix with unit transfers between nodes.

    Transfers move one unit from node ``i`` to node ``j`` and are accepted with
    the product-pmf ratio, so the law conditioned on the total is invariant.
    """
    d = degrees.astype(np.int64).copy()
    n = len(d)
    lp = log_pmf(np.arange(params.window + 2), params)

    def lpmf(k: int) -> float:
        return float(lp[k]) if k < len(lp) else float(log_pmf(k, params))

    s = int(d.sum())
    while s != total:
        i = int(rng.integers(n))
        step = 1 if s < total else -1
        new = d[i] + step
        if new < 0:
            continue
        if math.log(rng.random()) < lpmf(new) - lpmf(int(d[i])):
            d[i] = new
            s += step
    for _ in range(sweeps * n):
        i, j = rng.integers(n, size=2)
        if i == j or d[i] == 0:
            continue
        di, dj = int(d[i]), int(d[j])
        log_acc = lpmf(di - 1) + lpmf(dj + 1) - lpmf(di) - lpmf(dj)
        if log_acc >= 0 or math.log(rng.random()) < log_acc:
            d[i] -= 1
            d[j] += 1
    return d


def sample_conditioned_degrees(
    params: DegreeLawParams, total: int, rng: np.random.Generator, max_rejections: int | None = None
) -> DegreeSequence:
    """``n`` i.i.d. degrees from the law, conditioned on summing exactly to ``total``.

    Rejection sampling is tried first; after ``100 sqrt(n)`` misses the
    exchange chain takes over from the last draw.
    """
    if total < 0 or total % 2:
        raise InputError(f"degree total must be even and non-negative, got {total}")
    n = _node_count(params)
    if max_rejections is None:
        max_rejections = math.ceil(CONDITIONED_FALLBACK_FACTOR * math.sqrt(n))
    row, _ = rejection_draw(params, total, rng, max_rejections)
    if row is None:
        start = np.searchsorted(_cdf(params), rng.random(n), side="right")
        row = exchange_chain(start, params, total, rng)
    return DegreeSequence.from_degrees(row)


def rejection_acceptance(
    params: DegreeLawParams, total: int, rng: np.random.Generator, accepted: int
) -> ConditioningStats:
    """Count i.i.d. attempts needed to collect ``accepted`` rows hitting ``total``."""
    n = _node_count(params)
    cdf = _cdf(params)
    batch = max(1, _DRAW_BUDGET // n)
    attempts = hits = 0
    while hits < accepted:
        sums = _row_sums(cdf, rng, batch, n)
        ok = np.flatnonzero(sums == total)
        need = accepted - hits
        if ok.size >= need:
            attempts += int(ok[need - 1]) + 1
            hits = accepted
        else:
            attempts += batch
            hits += ok.size
    return ConditioningStats(attempts, hits)


# -- concentration ------------------------------------------------------------------
@dataclass(frozen=True)
class ConcentrationReport:
    alpha1: float
    alpha2: float
    in_A: bool
    in_A1: bool
    in_A2: bool
    max_pos_dev: float
    max_neg_dev: float
    mean: float
    target_total: int
    total: int
    d_min: int
    d_max: int


def default_alphas(beta: float) -> tuple[float, float]:
    return 4.0 / beta, 4.0 / beta


def concentration_report(
    d: DegreeSequence, c: float, n: float, alpha1: float, alpha2: float
) -> ConcentrationReport:
    """Classify a degree sequence against the mean, window and max-degree sets.

    Deviations are reported in units of ``sqrt(ln n)``; the window set accepts
    ``-sqrt(alpha1 ln n) <= d_i - mean <= sqrt(alpha2 ln n)`` for every node.
    """
    scale = math.sqrt(math.log(n))
    degs = d.as_array()
    if degs.size:
        pos = max(0.0, float(degs.max()) - d.mean) / scale
        neg = max(0.0, d.mean - float(degs.min())) / scale
    else:
        pos = neg = 0.0
    tt = target_total(c, n)
    return ConcentrationReport(
        alpha1=alpha1,
        alpha2=alpha2,
        in_A=d.total == tt,
        in_A1=pos <= math.sqrt(alpha2) and neg <= math.sqrt(alpha1),
        in_A2=bool(degs.size == 0 or d.d_max <= n**0.25),
        max_pos_dev=pos,
        max_neg_dev=neg,
        mean=d.mean,
        target_total=tt,
        total=d.total,
        d_min=d.d_min,
        d_max=d.d_max,
    )
