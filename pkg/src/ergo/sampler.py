"""Metropolis-Hastings chain for graphs weighted by ``exp(-beta * sum d_i^2)`` at fixed ``n`` and ``E``.

Proposals remove a uniformly chosen present edge and add a uniformly chosen
absent pair.  Both counts are constant along the chain, so the proposal is
symmetric and the plain Metropolis acceptance ``min(1, exp(-beta * delta))``
leaves the target law invariant.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numba
import numpy as np
from scipy.special import comb, logsumexp

from .errors import CapacityError, InputError
from .graph import Graph, energy, graph_from_edge_list, pair_count, random_gnm

ENUMERATION_LIMIT = 10**7


def mix64(seed: int, i: int) -> int:
    """Derive the 64-bit seed of replica ``i`` via numpy's ``SeedSequence`` hash."""
    return int(np.random.SeedSequence([int(seed), int(i)]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class Move:
    remove: tuple[int, int]
    add: tuple[int, int]


def _check_proposable(n: int, m: int) -> None:
    if m == 0 or m == pair_count(n):
        raise InputError(f"no valid swap move with E={m} of {pair_count(n)} pairs")


def propose(g: Graph, rng: np.random.Generator) -> Move:
    _check_proposable(g.n, g.edge_count)
    remove = g.edge_at(int(rng.integers(g.edge_count)))
    while True:
        x, y = (int(t) for t in rng.integers(g.n, size=2))
        if x != y and not g.has_edge(x, y):
            return Move(remove, (min(x, y), max(x, y)))


def delta_energy(g: Graph, move: Move) -> int:
    """Exact change in ``sum d_i^2`` if ``move`` were applied to ``g``."""
    (u, v), (x, y) = move.remove, move.add
    if not g.has_edge(u, v):
        raise InputError(f"move removes absent edge {move.remove}")
    if x == y or g.has_edge(x, y):
        raise InputError(f"move adds invalid pair {move.add}")
    deg = {w: g.degree(w) for w in (u, v, x, y)}
    delta = -(2 * deg[u] - 1) - (2 * deg[v] - 1)
    deg[u] -= 1
    deg[v] -= 1
    return delta + (2 * deg[x] + 1) + (2 * deg[y] + 1)


def acceptance_probability(beta: float, delta: int) -> float:
    if delta <= 0 or beta == 0:
        return 1.0
    return math.exp(-beta * delta)


def step(g: Graph, beta: float, rng: np.random.Generator) -> bool:
    """One Metropolis step, mutating ``g`` in place on acceptance."""
    move = propose(g, rng)
    delta = delta_energy(g, move)
    if delta > 0 and beta > 0 and rng.random() >= math.exp(-beta * delta):
        return False
    g.remove_edge(*move.remove)
    g.add_edge(*move.add)
    return True


# -- long runs ----------------------------------------------------------------------
def default_burn_in(m: int) -> int:
    return 20 * m * math.ceil(math.log(m + 1))


def default_thinning(m: int) -> int:
    return max(1, 2 * m)


@dataclass(frozen=True)
class ChainConfig:
    beta: float
    n: int
    target_edges: int
    steps: int
    burn_in: int | None = None
    thinning: int | None = None
    seed: int = 0

    def resolved(self) -> "ChainConfig":
        """Copy with defaults filled in and every precondition checked."""
        if self.beta < 0 or not math.isfinite(self.beta):
            raise InputError("beta must be finite and non-negative")
        if self.n < 2:
            raise InputError("n must be at least 2")
        if not 0 <= self.target_edges <= pair_count(self.n):
            raise InputError(f"target_edges must lie in [0, {pair_count(self.n)}]")
        if self.steps < 0:
            raise InputError("steps must be non-negative")
        if self.steps:
            _check_proposable(self.n, self.target_edges)
        if not 0 <= self.seed < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")
        burn = default_burn_in(self.target_edges) if self.burn_in is None else self.burn_in
        thin = default_thinning(self.target_edges) if self.thinning is None else self.thinning
        if burn < 0 or thin < 1:
            raise InputError("burn_in must be >= 0 and thinning >= 1")
        if burn > self.steps:
            raise InputError(f"burn_in ({burn}) exceeds steps ({self.steps})")
        return replace(self, burn_in=burn, thinning=thin)


@numba.njit(cache=True)
def _chain_kernel(n, edges, beta, steps, burn_in, thinning, rng):
    m = edges.shape[0]
    deg = np.zeros(n, dtype=np.int64)
    index = dict()
    for i in range(m):
        u, v = edges[i, 0], edges[i, 1]
        deg[u] += 1
        deg[v] += 1
        index[u * n + v] = i
    e = 0
    for i in range(n):
        e += deg[i] * deg[i]
    n_snap = (steps - burn_in) // thinning
    snaps = np.empty((n_snap, m, 2), dtype=np.int64)
    trace = np.empty(steps + 1, dtype=np.int64)
    trace[0] = e
    accepted = 0
    k = 0
    codes = np.empty(m, dtype=np.int64)
    for t in range(1, steps + 1):
        r = rng.integers(0, m)
        u, v = edges[r, 0], edges[r, 1]
        while True:
            x = rng.integers(0, n)
            y = rng.integers(0, n)
            if x == y:
                continue
            if x > y:
                x, y = y, x
            if x * n + y not in index:
                break
        delta = -(2 * deg[u] - 1) - (2 * deg[v] - 1)
        deg[u] -= 1
        deg[v] -= 1
        delta += (2 * deg[x] + 1) + (2 * deg[y] + 1)
        ok = True
        if delta > 0 and beta > 0.0:
            ok = rng.random() < math.exp(-beta * delta)
        if ok:
            deg[x] += 1
            deg[y] += 1
            del index[u * n + v]
            index[x * n + y] = r
            edges[r, 0] = x
            edges[r, 1] = y
            e += delta
            accepted += 1
        else:
            deg[u] += 1
            deg[v] += 1
        trace[t] = e
        if t > burn_in and (t - burn_in) % thinning == 0:
            for i in range(m):
                codes[i] = edges[i, 0] * n + edges[i, 1]
            codes.sort()
            for i in range(m):
                snaps[k, i, 0] = codes[i] // n
                snaps[k, i, 1] = codes[i] % n
            k += 1
    return snaps, trace, accepted


@dataclass
class ChainResult:
    config: ChainConfig
    initial: Graph
    snapshots: np.ndarray  # (k, E, 2), each snapshot's edges sorted
    energy_trace: np.ndarray  # energy after 0, 1, ..., steps proposals
    accepted: int
    final: Graph = field(repr=False, default=None)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.config.steps if self.config.steps else 0.0

    def graphs(self) -> Iterator[Graph]:
        for s in self.snapshots:
            yield graph_from_edge_list(self.config.n, s.tolist())


def run_chain(cfg: ChainConfig, initial: Graph | None = None) -> ChainResult:
    """Run one chain; the same config (and seed) always yields the same output.

    Unless ``initial`` is given the chain starts from a uniform ``E``-edge graph
    drawn with the same generator, which is the ``beta = 0`` stationary law.
    """
    cfg = cfg.resolved()
    rng = np.random.default_rng(cfg.seed)
    if initial is None:
        initial = random_gnm(cfg.n, cfg.target_edges, rng)
    elif initial.n != cfg.n or initial.edge_count != cfg.target_edges:
        raise InputError("initial graph does not match n / target_edges")
    edges = initial.edge_array().copy()
    if cfg.steps:
        snaps, trace, accepted = _chain_kernel(
            cfg.n, edges, float(cfg.beta), cfg.steps, cfg.burn_in, cfg.thinning, rng
        )
    else:
        snaps = np.zeros((0, cfg.target_edges, 2), dtype=np.int64)
        trace = np.array([energy(initial)], dtype=np.int64)
        accepted = 0
    final = graph_from_edge_list(cfg.n, edges.tolist())
    return ChainResult(cfg, initial, snaps, trace, int(accepted), final)


def run_replicas(cfg: ChainConfig, count: int) -> list[ChainResult]:
    """Independent chains; replica ``i`` is seeded with ``mix64(cfg.seed, i)``."""
    return [run_chain(replace(cfg, seed=mix64(cfg.seed, i))) for i in range(count)]


def sample_erg(n: int, m: int, beta: float, seed: int, extra_steps: int = 0) -> Graph:
    """Final state of a default-length chain (burn-in plus ``extra_steps``)."""
    burn = default_burn_in(m)
    cfg = ChainConfig(beta, n, m, burn + extra_steps, burn_in=burn, thinning=extra_steps + 1, seed=seed)
    return run_chain(cfg).final


# -- exact law on tiny instances ---------------------------------------------------------
EdgeKey = tuple[tuple[int, int], ...]


def enumerate_exact(n: int, m: int, beta: float) -> dict[EdgeKey, float]:
    """Exact stationary law over all labelled simple graphs with ``m`` edges."""
    pairs = list(itertools.combinations(range(n), 2))
    count = comb(len(pairs), m, exact=True)
    if count > ENUMERATION_LIMIT:
        raise CapacityError(f"{count} graphs exceeds the enumeration limit {ENUMERATION_LIMIT}")
    keys = []
    energies = []
    for subset in itertools.combinations(pairs, m):
        deg = [0] * n
        for u, v in subset:
            deg[u] += 1
            deg[v] += 1
        keys.append(subset)
        energies.append(sum(d * d for d in deg))
    logw = -beta * np.asarray(energies, dtype=np.float64)
    probs = np.exp(logw - logsumexp(logw))
    return dict(zip(keys, probs.tolist()))


def empirical_law(snapshots: np.ndarray, n: int) -> dict[EdgeKey, float]:
    """Frequency of each distinct edge set among ``snapshots``."""
    if len(snapshots) == 0:
        return {}
    if pair_count(n) <= 62:
        # one bit per vertex pair: each snapshot becomes a single integer code
        u, v = snapshots[..., 0], snapshots[..., 1]
        bit = u * (2 * n - u - 1) // 2 + (v - u - 1)
        codes = np.bitwise_or.reduce(np.left_shift(np.int64(1), bit), axis=1)
        uniq, counts = np.unique(codes, return_counts=True)
        pairs = list(itertools.combinations(range(n), 2))
        rows = [tuple(pairs[b] for b in range(len(pairs)) if (int(c) >> b) & 1) for c in uniq]
    else:
        flat = snapshots.reshape(len(snapshots), -1)
        uniq, counts = np.unique(flat, axis=0, return_counts=True)
        rows = [tuple(tuple(int(t) for t in pair) for pair in row.reshape(-1, 2)) for row in uniq]
    total = counts.sum()
    return {row: c / total for row, c in zip(rows, counts.tolist())}


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def reachable_states(n: int, m: int) -> dict[EdgeKey, set[EdgeKey]]:
    """Swap-move adjacency over all ``m``-edge graphs on ``n`` vertices (tiny ``n`` only)."""
    pairs = list(itertools.combinations(range(n), 2))
    if comb(len(pairs), m, exact=True) > 10**5:
        raise CapacityError("state space too large for exhaustive reachability")
    out = {}
    for subset in itertools.combinations(pairs, m):
        present = set(subset)
        nbrs = set()
        for r in subset:
            for a in pairs:
                if a not in present:
                    nbrs.add(tuple(sorted((present - {r}) | {a})))
        out[subset] = nbrs
    return out
