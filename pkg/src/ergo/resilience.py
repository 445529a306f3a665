"""Connectivity under independent edge failures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import InputError
from .graph import DegreeSequence, Graph, graph_from_edge_list, random_gnm
from .stats import wilson_interval


def fail_edges(g: Graph, p: float, rng: np.random.Generator) -> Graph:
    """Delete each edge independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise InputError(f"failure probability {p} outside [0, 1]")
    e = g.edge_array()
    keep = rng.random(len(e)) >= p
    return graph_from_edge_list(g.n, e[keep].tolist())


def er_sample(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Erdős–Rényi ``G(n, m)``: a uniform simple graph with exactly ``m`` edges."""
    return random_gnm(n, m, rng)


@numba.njit(cache=True)
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@numba.njit(cache=True)
def _critical_levels(n, edges, marks):
    """Per trial: the failure level above which the graph disconnects, and the one above
    which some vertex is isolated.

    An edge survives level ``p`` iff its mark is ``>= p``.  Adding edges in
    decreasing mark order, connectivity is reached at the mark of the edge that
    merges the last two components; a vertex keeps an edge up to its largest
    incident mark.
    """
    trials, m = marks.shape
    disc = np.empty(trials)
    iso = np.empty(trials)
    parent = np.empty(n, dtype=np.int64)
    best = np.empty(n)
    for t in range(trials):
        row = marks[t]
        for v in range(n):
            parent[v] = v
            best[v] = -1.0
        for i in range(m):
            a, b = edges[i, 0], edges[i, 1]
            if row[i] > best[a]:
                best[a] = row[i]
            if row[i] > best[b]:
                best[b] = row[i]
        lo = np.inf
        for v in range(n):
            if best[v] < lo:
                lo = best[v]
        iso[t] = lo if n >= 2 else np.inf
        if n < 2:
            disc[t] = np.inf
            continue
        order = np.argsort(-row)
        comps = n
        level = -1.0
        for i in order:
            ra = _find(parent, edges[i, 0])
            rb = _find(parent, edges[i, 1])
            if ra != rb:
                parent[ra] = rb
                comps -= 1
                if comps == 1:
                    level = row[i]
                    break
        disc[t] = level
    return disc, iso


def critical_levels(g: Graph, marks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return _critical_levels(g.n, g.edge_array(), np.ascontiguousarray(marks, dtype=np.float64))


def isolation_bound(d, p: float) -> tuple[float, float]:
    """Union bound ``sum_i p^{d_i}`` on some vertex being isolated; returns ``(capped, raw)``."""
    if not 0.0 <= p <= 1.0:
        raise InputError(f"failure probability {p} outside [0, 1]")
    deg = d.as_array() if isinstance(d, DegreeSequence) else np.asarray(d, dtype=np.int64)
    raw = float(np.sum(np.power(float(p), deg.astype(np.float64))))
    return min(raw, 1.0), raw


def thresholds(c: float, delta_tilde: float) -> tuple[float, float, float]:
    """``(exp(-1/(c(1-delta))), exp(-1/c), max(0, (c-1)/c))``."""
    if c <= 0:
        raise InputError("c must be positive")
    if not 0.0 <= delta_tilde < 1.0:
        raise InputError("delta_tilde must lie in [0, 1)")
    return math.exp(-1.0 / (c * (1.0 - delta_tilde))), math.exp(-1.0 / c), max(0.0, (c - 1.0) / c)


@dataclass(frozen=True)
class ResilienceReport:
    p_grid: list[float]
    disconnect_prob: list[float]
    ci_low: list[float]
    ci_high: list[float]
    isolation_bound: list[float]
    isolation_bound_raw: list[float]
    isolated_freq: list[float]
    trials: int
    coupled: bool
    threshold_erg: float | None = None
    threshold_erg_proved: float | None = None
    threshold_er: float | None = None
    delta_tilde: float | None = None
    meta: dict = field(default_factory=dict)

    def isolation_consistent(self) -> list[bool]:
        """Empirical isolated-vertex frequency within 3 standard errors of the union bound."""
        out = []
        for f, b in zip(self.isolated_freq, self.isolation_bound_raw):
            se = math.sqrt(f * (1 - f) / self.trials)
            out.append(f <= b + 3 * se)
        return out


def disconnect_probability(
    g: Graph, p_grid, trials: int, rng: np.random.Generator, coupled: bool = True
) -> ResilienceReport:
    """Monte-Carlo probability that ``g`` is disconnected after independent edge failures.

    With ``coupled`` every trial draws one uniform mark per edge and reuses it for
    all ``p``, so each trial's indicator, and hence the estimated curve, is
    non-decreasing in ``p``.
    """
    if trials < 1:
        raise InputError("trials must be at least 1")
    grid = [float(p) for p in p_grid]
    for p in grid:
        if not 0.0 <= p <= 1.0:
            raise InputError(f"failure probability {p} outside [0, 1]")
    m = g.edge_count
    if coupled:
        disc, iso = critical_levels(g, rng.random((trials, m)))
        levels = [(disc, iso)] * len(grid)
    else:
        levels = [critical_levels(g, rng.random((trials, m))) for _ in grid]
    probs, lows, highs, freqs, bounds, raws = [], [], [], [], [], []
    deg = g.degrees()
    for p, (disc, iso) in zip(grid, levels):
        k = int(np.count_nonzero(p > disc))
        lo, hi = wilson_interval(k, trials)
        probs.append(k / trials)
        lows.append(lo)
        highs.append(hi)
        freqs.append(int(np.count_nonzero(p > iso)) / trials)
        capped, raw = isolation_bound(deg, p)
        bounds.append(capped)
        raws.append(raw)
    return ResilienceReport(grid, probs, lows, highs, bounds, raws, freqs, trials, coupled)


def with_thresholds(report: ResilienceReport, c: float, delta_tilde: float, **meta) -> ResilienceReport:
    proved, iso, er = thresholds(c, delta_tilde)
    return ResilienceReport(
        **{
            **report.__dict__,
            "threshold_erg_proved": proved,
            "threshold_erg": iso,
            "threshold_er": er,
            "delta_tilde": delta_tilde,
            "meta": {**report.meta, **meta},
        }
    )
