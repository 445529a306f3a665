"""Configuration model: uniform stub pairing, erasure, and simple-graph rejection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .degree_law import DegreeLawParams, sample_conditioned_degrees
from .errors import InputError, RejectionFailure
from .graph import DegreeSequence, Graph, graph_from_edge_list
from .stats import wilson_interval

MAX_TRIES_CAP = 10**7
_BATCH_STUBS = 1_000_000


@dataclass(frozen=True)
class Multigraph:
    """Pairs ``(u, v)`` with ``u <= v``; loops and repeated pairs allowed."""

    n: int
    edges: np.ndarray

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        np.add.at(deg, self.edges[:, 0], 1)
        np.add.at(deg, self.edges[:, 1], 1)
        return deg

    def loop_count(self) -> int:
        return int(np.count_nonzero(self.edges[:, 0] == self.edges[:, 1]))

    def multi_edge_count(self) -> int:
        """Number of surplus copies among non-loop pairs."""
        e = self.edges[self.edges[:, 0] != self.edges[:, 1]]
        if len(e) == 0:
            return 0
        return len(e) - len(np.unique(e, axis=0))

    def is_simple(self) -> bool:
        return self.loop_count() == 0 and self.multi_edge_count() == 0


def _as_degrees(d) -> np.ndarray:
    arr = d.as_array() if isinstance(d, DegreeSequence) else np.asarray(d, dtype=np.int64)
    if arr.ndim != 1 or (arr < 0).any():
        raise InputError("degree sequence must be a 1-d array of non-negative integers")
    if int(arr.sum()) % 2:
        raise InputError(f"degree sum {int(arr.sum())} is odd")
    return arr


def pair_stubs(d, rng: np.random.Generator) -> Multigraph:
    """Uniform perfect matching of the stubs: shuffle the stub array and pair neighbours."""
    deg = _as_degrees(d)
    stubs = np.repeat(np.arange(len(deg)), deg)
    rng.shuffle(stubs)
    pairs = np.sort(stubs.reshape(-1, 2), axis=1)
    return Multigraph(len(deg), pairs)


def erase(mg: Multigraph) -> Graph:
    """Drop loops and merge parallel edges."""
    e = mg.edges[mg.edges[:, 0] != mg.edges[:, 1]]
    if len(e):
        e = np.unique(e, axis=0)
    return graph_from_edge_list(mg.n, e.tolist())


def lambda_stat(d) -> float:
    deg = _as_degrees(d)
    total = int(deg.sum())
    if total == 0:
        raise InputError("lambda is undefined for an edgeless degree sequence")
    return float(np.dot(deg, deg - 1)) / (2 * total)


def predicted_simple(lam: float) -> float:
    return math.exp(-lam - lam * lam)


def default_max_tries(d) -> int:
    deg = _as_degrees(d)
    if deg.sum() == 0:
        return 1
    lam = lambda_stat(deg)
    expo = lam + lam * lam
    if expo > math.log(MAX_TRIES_CAP / 100):
        return MAX_TRIES_CAP
    return min(MAX_TRIES_CAP, math.ceil(100 * math.exp(expo)))


def sample_simple_counted(d, rng: np.random.Generator, max_tries: int | None = None) -> tuple[Graph, int]:
    deg = _as_degrees(d)
    if max_tries is None:
        max_tries = default_max_tries(deg)
    for tries in range(1, max_tries + 1):
        mg = pair_stubs(deg, rng)
        if mg.is_simple():
            return graph_from_edge_list(mg.n, mg.edges.tolist()), tries
    raise RejectionFailure(
        f"no simple pairing in {max_tries} tries (simple fraction 0/{max_tries})", tries=max_tries
    )


def sample_simple(d, rng: np.random.Generator, max_tries: int | None = None) -> Graph:
    """Uniform simple graph with degree sequence ``d`` by rejection of non-simple pairings.

    Each simple graph arises from the same number of pairings, so the accepted
    output is uniform over simple realizations.  Graphicality is not checked up
    front; an infeasible ``d`` simply exhausts ``max_tries``.
    """
    return sample_simple_counted(d, rng, max_tries)[0]


def _simple_mask(deg: np.ndarray, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised simplicity indicator for ``trials`` independent pairings."""
    stubs = np.repeat(np.arange(len(deg)), deg)
    n = len(deg)
    out = np.empty(trials, dtype=bool)
    batch = max(1, _BATCH_STUBS // max(1, len(stubs)))
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        perm = rng.permuted(np.broadcast_to(stubs, (b, len(stubs))), axis=1)
        pairs = perm.reshape(b, -1, 2)
        lo = pairs.min(axis=2)
        hi = pairs.max(axis=2)
        loops = (lo == hi).any(axis=1)
        codes = np.sort(lo * n + hi, axis=1)
        dup = (codes[:, 1:] == codes[:, :-1]).any(axis=1)
        out[done : done + b] = ~(loops | dup)
        done += b
    return out


@dataclass(frozen=True)
class ConfigStats:
    lam: float
    predicted_simple: float
    empirical_simple: float
    trials: int
    successes: int
    ci_low: float
    ci_high: float


def simple_fraction(d, trials: int, rng: np.random.Generator) -> ConfigStats:
    """Monte-Carlo probability that a uniform pairing is simple, next to ``exp(-lambda - lambda^2)``."""
    if trials < 1:
        raise InputError("trials must be at least 1")
    deg = _as_degrees(d)
    if deg.sum() == 0:
        lam = 0.0
        hits = trials
    else:
        lam = lambda_stat(deg)
        hits = int(_simple_mask(deg, trials, rng).sum())
    lo, hi = wilson_interval(hits, trials)
    return ConfigStats(lam, predicted_simple(lam), hits / trials, trials, hits, lo, hi)


@dataclass(frozen=True)
class ErasedStats:
    trials: int
    mean_loops: float
    mean_multi_edges: float
    mean_edges_lost: float
    mean_degree_loss: float


def erased_stats(d, trials: int, rng: np.random.Generator) -> ErasedStats:
    """Average damage the erased model does to ``d``: loops, surplus copies and lost degree."""
    deg = _as_degrees(d)
    loops = multi = lost = 0
    for _ in range(trials):
        mg = pair_stubs(deg, rng)
        g = erase(mg)
        loops += mg.loop_count()
        multi += mg.multi_edge_count()
        lost += len(mg.edges) - g.edge_count
    n = max(1, len(deg))
    return ErasedStats(trials, loops / trials, multi / trials, lost / trials, 2 * lost / (trials * n))


def sample_pi_n(
    params: DegreeLawParams, total: int, rng: np.random.Generator, max_redraws: int = 1000
) -> tuple[Graph, float]:
    """Approximate draw from the squared-degree ERG: conditioned degrees, then a uniform simple graph.

    The returned weight ``exp(-lambda - lambda^2)`` estimates the simple-pairing
    probability; using it as an importance weight corrects the degree-sequence law.
    """
    for _ in range(max_redraws):
        d = sample_conditioned_degrees(params, total, rng)
        try:
            g = sample_simple(d, rng)
        except RejectionFailure:
            continue
        lam = lambda_stat(d) if d.total else 0.0
        return g, predicted_simple(lam)
    raise RejectionFailure(f"no realizable degree sequence in {max_redraws} redraws", tries=max_redraws)
