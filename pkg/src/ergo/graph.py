"""Simple undirected labelled graphs, degree statistics and cut arithmetic."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InputError

# Bitmask paths (brute-force cuts) hold a whole vertex subset in one machine word.
BITMASK_MAX_N = 63


def _canon(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Adjacency is kept as per-vertex neighbour sets together with an indexed edge
    list, so that membership tests, neighbour iteration and uniform edge
    selection are all cheap.  Analysis code treats instances as immutable; only
    the MCMC sampler mutates a private copy through :meth:`add_edge` and
    :meth:`remove_edge`.
    """

    __slots__ = ("n", "_adj", "_edges", "_pos")

    def __init__(self, n: int):
        if n < 0:
            raise InputError(f"vertex count must be non-negative, got {n}")
        self.n = int(n)
        self._adj: list[set[int]] = [set() for _ in range(self.n)]
        self._edges: list[tuple[int, int]] = []
        self._pos: dict[tuple[int, int], int] = {}

    # -- construction / mutation -------------------------------------------------
    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise InputError(f"vertex {v} out of range for n={self.n}")

    def add_edge(self, u: int, v: int) -> None:
        self._check_vertex(u)
        self._check_vertex(v)
        if u == v:
            raise InputError(f"self-loop at vertex {u}")
        e = _canon(u, v)
        if e in self._pos:
            raise InputError(f"duplicate edge {e}")
        self._pos[e] = len(self._edges)
        self._edges.append(e)
        self._adj[u].add(v)
        self._adj[v].add(u)

    def remove_edge(self, u: int, v: int) -> None:
        e = _canon(u, v)
        try:
            i = self._pos.pop(e)
        except KeyError:
            raise InputError(f"edge {e} not present") from None
        last = self._edges.pop()
        if i < len(self._edges):
            self._edges[i] = last
            self._pos[last] = i
        self._adj[u].discard(v)
        self._adj[v].discard(u)

    def copy(self) -> "Graph":
        g = Graph(self.n)
        g._adj = [set(s) for s in self._adj]
        g._edges = list(self._edges)
        g._pos = dict(self._pos)
        return g

    # -- queries -------------------------------------------------------------------
    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def edge_at(self, i: int) -> tuple[int, int]:
        """The ``i``-th edge in internal (unsorted) order; used for uniform edge draws."""
        return self._edges[i]

    def edges(self) -> list[tuple[int, int]]:
        """Edges as sorted ``(u, v)`` pairs with ``u < v``."""
        return sorted(self._edges)

    def neighbors(self, v: int) -> list[int]:
        return sorted(self._adj[v])

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def degrees(self) -> np.ndarray:
        return np.fromiter((len(s) for s in self._adj), dtype=np.int64, count=self.n)

    def edge_array(self) -> np.ndarray:
        """Sorted edges as an ``(E, 2)`` int64 array."""
        if not self._edges:
            return np.zeros((0, 2), dtype=np.int64)
        return np.array(self.edges(), dtype=np.int64)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        if self._edges:
            e = np.array(self._edges)
            a[e[:, 0], e[:, 1]] = 1.0
            a[e[:, 1], e[:, 0]] = 1.0
        return a

    def sparse_adjacency(self) -> sp.csr_matrix:
        e = self.edge_array()
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(len(rows), dtype=np.float64)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def adjacency_masks(self) -> list[int]:
        """Neighbour sets as integer bitmasks (only for ``n <= 63``)."""
        if self.n > BITMASK_MAX_N:
            raise InputError(f"bitmask adjacency needs n <= {BITMASK_MAX_N}")
        masks = [0] * self.n
        for u, v in self._edges:
            masks[u] |= 1 << v
            masks[v] |= 1 << u
        return masks

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and set(self._pos) == set(other._pos)

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._pos)))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, E={self.edge_count})"


def graph_from_edge_list(n: int, edges: Iterable[Sequence[int]], strict: bool = True) -> Graph:
    """Build a :class:`Graph` from vertex pairs.

    Self-loops are always rejected.  Repeated pairs raise in strict mode and
    are silently merged otherwise.
    """
    g = Graph(n)
    for pair in edges:
        u, v = int(pair[0]), int(pair[1])
        g._check_vertex(u)
        g._check_vertex(v)
        if u == v:
            raise InputError(f"self-loop at vertex {u}")
        if g.has_edge(u, v):
            if strict:
                raise InputError(f"duplicate edge {_canon(u, v)}")
            continue
        g.add_edge(u, v)
    return g


def energy(g: Graph) -> int:
    """Sum of squared degrees, as an exact integer."""
    return sum(len(s) * len(s) for s in g._adj)


@dataclass(frozen=True)
class DegreeSequence:
    degrees: tuple[int, ...]
    mean: float
    variance: float
    d_min: int
    d_max: int
    total: int

    @classmethod
    def from_degrees(cls, degrees: Iterable[int]) -> "DegreeSequence":
        ds = tuple(int(d) for d in degrees)
        if any(d < 0 for d in ds):
            raise InputError("degrees must be non-negative")
        n = len(ds)
        total = sum(ds)
        if n == 0:
            return cls(ds, 0.0, 0.0, 0, 0, 0)
        sq = sum(d * d for d in ds)
        # exact rational variance before rounding to float
        var = Fraction(n * sq - total * total, n * n)
        return cls(ds, total / n, float(var), min(ds), max(ds), total)

    @property
    def n(self) -> int:
        return len(self.degrees)

    def sum_of_squares(self) -> int:
        return sum(d * d for d in self.degrees)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.degrees, dtype=np.int64)


def degree_stats(g: Graph) -> DegreeSequence:
    return DegreeSequence.from_degrees(len(s) for s in g._adj)


@dataclass(frozen=True)
class CutStats:
    subset_size: int
    internal: int
    crossing: int
    volume: int


def cut_stats(g: Graph, subset: Iterable[int]) -> CutStats:
    """Edge counts for the cut ``(U, U^c)``: internal ``e_U``, crossing and ``Vol(U)``."""
    members = set()
    for v in subset:
        v = int(v)
        g._check_vertex(v)
        members.add(v)
    twice_internal = 0
    crossing = 0
    volume = 0
    for v in members:
        nb = g._adj[v]
        volume += len(nb)
        k = len(nb & members) if len(nb) > len(members) else sum(1 for w in members if w in nb)
        twice_internal += k
        crossing += len(nb) - k
    return CutStats(len(members), twice_internal // 2, crossing, volume)


def is_connected(g: Graph) -> bool:
    if g.n <= 1:
        return True
    seen = bytearray(g.n)
    seen[0] = 1
    queue = deque([0])
    reached = 1
    while queue:
        v = queue.popleft()
        for w in g._adj[v]:
            if not seen[w]:
                seen[w] = 1
                reached += 1
                queue.append(w)
    return reached == g.n


# -- edge-list text format ---------------------------------------------------------
def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.edge_count}"]
    lines.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    """Parse the ``"n E"`` header + ``"u v"`` lines format; any deviation raises."""
    if not text.endswith("\n"):
        raise InputError("edge list must be newline-terminated")
    lines = text[:-1].split("\n")
    header = lines[0].split(" ")
    if len(header) != 2:
        raise InputError(f"bad header line {lines[0]!r}")
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise InputError(f"bad header line {lines[0]!r}") from None
    body = lines[1:] if m or len(lines) > 1 else []
    if len(body) != m:
        raise InputError(f"header declares {m} edges, found {len(body)} lines")
    pairs = []
    for ln in body:
        parts = ln.split(" ")
        if len(parts) != 2:
            raise InputError(f"bad edge line {ln!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputError(f"bad edge line {ln!r}") from None
        if not u < v:
            raise InputError(f"edge line {ln!r} must satisfy u < v")
        pairs.append((u, v))
    return graph_from_edge_list(n, pairs, strict=True)


def read_edge_list(path: str | Path) -> Graph:
    return parse_edge_list(Path(path).read_text())


def write_edge_list(g: Graph, path: str | Path) -> None:
    Path(path).write_text(format_edge_list(g))


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def pair_from_index(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map lexicographic pair indices ``0..n(n-1)/2-1`` to ``(u, v)`` with ``u < v``."""
    k = np.asarray(k, dtype=np.int64)
    m = pair_count(n)
    # closed-form inverse of the row-start offsets, then an integer fix-up for rounding
    u = n - 2 - np.floor(np.sqrt(-8.0 * k + 4.0 * n * (n - 1) - 7) / 2.0 - 0.5).astype(np.int64)
    start = m - (n - u) * (n - u - 1) // 2
    low = k < start
    u[low] -= 1
    start = m - (n - u) * (n - u - 1) // 2
    high = k >= start + (n - u - 1)
    u[high] += 1
    start = m - (n - u) * (n - u - 1) // 2
    v = k - start + u + 1
    return u, v


def random_gnm(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Uniform simple graph with exactly ``m`` edges (a uniform ``m``-subset of pairs)."""
    total = pair_count(n)
    if not 0 <= m <= total:
        raise InputError(f"edge count {m} outside [0, {total}] for n={n}")
    idx = np.sort(rng.choice(total, size=m, replace=False)) if m else np.zeros(0, dtype=np.int64)
    u, v = pair_from_index(idx, n)
    g = Graph(n)
    for a, b in zip(u.tolist(), v.tolist()):
        g.add_edge(a, b)
    return g
