"""Exact-oracle checks run by ``ergo validate`` against the shipped fixture graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .cuts import cheeger_report
from .errors import OracleViolation
from .graph import Graph, energy, parse_edge_list, random_gnm
from .resilience import disconnect_probability
from .sampler import ChainConfig, delta_energy, empirical_law, enumerate_exact, propose, run_chain, tv_distance

FIXTURES = ("k4", "c6", "star_k13", "path_p5", "c4")

# Known spectra / cut values of the fixtures: (phi, Phi, lambda2_L, lambda2_P)
KNOWN_SPECTRAL = {
    "k4": (2.0, 2 / 3, 4.0, -1 / 3),
    "c6": (2 / 3, 1 / 3, 1.0, 0.5),
    "star_k13": (1.0, 1.0, 1.0, 0.0),
}


def load_fixture(name: str) -> Graph:
    text = resources.files("ergo").joinpath(f"fixtures/{name}.txt").read_text()
    return parse_edge_list(text)


def perfect_matchings(items: list):
    """All perfect matchings of ``items`` (positions are distinct even if values repeat)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for i in range(len(rest)):
        for tail in perfect_matchings(rest[:i] + rest[i + 1 :]):
            yield [(first, rest[i])] + tail


def matching_law(degrees) -> tuple[int, Fraction, dict]:
    """Enumerate stub matchings of ``degrees``: count, exact simple fraction, law of multigraphs."""
    stubs = [v for v, d in enumerate(degrees) for _ in range(d)]
    count = 0
    simple = 0
    law: dict[tuple, int] = {}
    for mt in perfect_matchings(stubs):
        count += 1
        key = tuple(sorted(tuple(sorted(p)) for p in mt))
        law[key] = law.get(key, 0) + 1
        if all(a != b for a, b in key) and len(set(key)) == len(key):
            simple += 1
    return count, Fraction(simple, count), {k: Fraction(v, count) for k, v in law.items()}


def double_factorial_odd(k: int) -> int:
    """``(2k - 1)!!`` for ``k >= 0``."""
    return math.prod(range(1, 2 * k, 2))


@dataclass
class Check:
    name: str
    passed: bool
    detail: dict


def _check_chain(beta: float, tol: float, steps: int, seed: int) -> Check:
    burn = 10_000
    res = run_chain(ChainConfig(beta, 4, 3, steps + burn, burn_in=burn, thinning=1, seed=seed))
    tv = tv_distance(empirical_law(res.snapshots, 4), enumerate_exact(4, 3, beta))
    return Check(f"chain_tv_beta_{beta:g}", tv <= tol, {"tv": tv, "tolerance": tol, "steps": steps})


def _check_matchings() -> Check:
    detail = {}
    ok = True
    for d in [(1, 1), (2, 2), (2, 2, 2), (1, 1, 1, 1), (3, 1, 1, 1), (2, 2, 2, 2), (1, 2, 3, 2)]:
        count, frac, _ = matching_law(d)
        expect = double_factorial_odd(sum(d) // 2)
        ok &= count == expect
        detail[str(d)] = {"matchings": count, "expected": expect, "simple_fraction": float(frac)}
    _, frac, law = matching_law((2, 2, 2))
    ok &= frac == Fraction(8, 15)
    _, _, law22 = matching_law((2, 2))
    ok &= law22.get(((0, 1), (0, 1))) == Fraction(2, 3)
    return Check("stub_matchings", bool(ok), detail)


def _check_fixtures() -> Check:
    detail = {}
    ok = True
    for name in ("k4", "c6", "star_k13", "path_p5"):
        g = load_fixture(name)
        rep = cheeger_report(g, strict=False)
        good = not rep.violations
        if name in KNOWN_SPECTRAL:
            want = KNOWN_SPECTRAL[name]
            got = (rep.phi, rep.Phi, rep.lambda2_L, rep.lambda2_P)
            good &= all(abs(a - b) <= 1e-9 for a, b in zip(got, want))
        ok &= good
        detail[name] = {"passed": bool(good), "violations": rep.violations}
    return Check("cheeger_fixtures", bool(ok), detail)


def _check_percolation(trials: int, seed: int) -> Check:
    g = load_fixture("c4")
    edges = g.edges()
    exact = Fraction(0)
    for mask in range(1 << len(edges)):
        alive = [e for i, e in enumerate(edges) if (mask >> i) & 1]
        k = len(alive)
        prob = Fraction(1, 2) ** k * Fraction(1, 2) ** (len(edges) - k)
        if not _connected(g.n, alive):
            exact += prob
    rep = disconnect_probability(g, [0.5], trials, np.random.default_rng(seed))
    inside = rep.ci_low[0] <= float(exact) <= rep.ci_high[0]
    return Check(
        "c4_percolation",
        exact == Fraction(11, 16) and inside,
        {"exact": float(exact), "estimate": rep.disconnect_prob[0], "ci": [rep.ci_low[0], rep.ci_high[0]]},
    )


def _connected(n: int, edges) -> bool:
    adj = {v: set() for v in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, stack = {0}, [0]
    while stack:
        for w in adj[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == n


def _check_energy(moves: int, seed: int) -> Check:
    rng = np.random.default_rng(seed)
    failures = 0
    done = 0
    while done < moves:
        n = int(rng.integers(5, 30))
        m = int(rng.integers(1, n * (n - 1) // 2))
        g = random_gnm(n, m, rng)
        for _ in range(100):
            mv = propose(g, rng)
            d = delta_energy(g, mv)
            before = energy(g)
            g.remove_edge(*mv.remove)
            g.add_edge(*mv.add)
            failures += energy(g) - before != d
            done += 1
    return Check("incremental_energy", failures == 0, {"moves": done, "failures": failures})


def run_validation(seed: int = 0, chain_steps: int = 1_000_000, percolation_trials: int = 10_000) -> list[Check]:
    return [
        _check_chain(0.3, 0.02, chain_steps, seed),
        _check_chain(0.0, 0.01, chain_steps, seed + 1),
        _check_matchings(),
        _check_fixtures(),
        _check_percolation(percolation_trials, seed),
        _check_energy(10_000, seed),
    ]


def assert_valid(checks: list[Check]) -> None:
    bad = [c.name for c in checks if not c.passed]
    if bad:
        raise OracleViolation(f"oracle checks failed: {', '.join(bad)}")
