import itertools
import math

import numpy as np
import pytest

from ergo import CapacityError, InputError, energy, graph_from_edge_list
from ergo.graph import pair_count, random_gnm
from ergo.sampler import (
    ChainConfig,
    Move,
    acceptance_probability,
    default_burn_in,
    default_thinning,
    delta_energy,
    empirical_law,
    enumerate_exact,
    mix64,
    propose,
    reachable_states,
    run_chain,
    run_replicas,
    sample_erg,
    step,
    tv_distance,
)
from graphs import complete, path, star


def test_single_edge_is_always_removed(rng):
    g = graph_from_edge_list(4, [(1, 3)])
    for _ in range(200):
        mv = propose(g, rng)
        assert mv.remove == (1, 3)
        assert mv.add != (1, 3) and mv.add[0] < mv.add[1]


def test_proposal_frequencies(rng):
    g = random_gnm(5, 4, rng)
    N = 100_000
    removed = {e: 0 for e in g.edges()}
    added = {}
    for _ in range(N):
        mv = propose(g, rng)
        removed[mv.remove] += 1
        added[mv.add] = added.get(mv.add, 0) + 1
    for counts, k in ((removed, 4), (added, pair_count(5) - 4)):
        assert len(counts) == k
        sd = math.sqrt(N * (1 / k) * (1 - 1 / k))
        for c in counts.values():
            assert abs(c - N / k) <= 3.5 * sd


def test_proposal_kernel_symmetric():
    # q(G -> G') = 1 / (E * (pairs - E)) for every swap-adjacent pair; both factors are constant
    n, m = 5, 4
    for subset in itertools.combinations(itertools.combinations(range(n), 2), m):
        g = graph_from_edge_list(n, subset)
        assert g.edge_count * (pair_count(n) - g.edge_count) == m * (pair_count(n) - m)


def test_propose_rejects_degenerate(rng):
    with pytest.raises(InputError):
        propose(graph_from_edge_list(4, []), rng)
    with pytest.raises(InputError):
        propose(complete(4), rng)


def test_delta_examples():
    g = path(3)
    assert delta_energy(g, Move((0, 1), (0, 2))) == 0
    s = star(3)
    mv = Move((0, 1), (1, 2))
    before = energy(s)
    d = delta_energy(s, mv)
    s.remove_edge(0, 1)
    s.add_edge(1, 2)
    assert d == energy(s) - before == -2  # degrees (3,1,1,1) -> (2,1,2,1)
    with pytest.raises(InputError):
        delta_energy(path(3), Move((0, 2), (0, 1)))
    with pytest.raises(InputError):
        delta_energy(path(3), Move((0, 1), (1, 2)))


def test_incremental_energy_random(rng):
    done = 0
    while done < 100_000:
        n = int(rng.integers(4, 25))
        g = random_gnm(n, int(rng.integers(1, pair_count(n))), rng)
        for _ in range(1000):
            mv = propose(g, rng)
            d = delta_energy(g, mv)
            before = energy(g)
            g.remove_edge(*mv.remove)
            g.add_edge(*mv.add)
            assert energy(g) - before == d
            done += 1


def test_acceptance_probability():
    assert acceptance_probability(0.0, 17) == 1.0
    assert acceptance_probability(0.1, 4) == pytest.approx(0.67032, abs=5e-6)
    assert acceptance_probability(3.0, 0) == acceptance_probability(3.0, -5) == 1.0


def test_detailed_balance_identity():
    for beta in (0.0, 0.3, 2.0):
        for delta in range(-6, 7):
            fwd = math.exp(-beta * delta) * acceptance_probability(beta, -delta)
            assert acceptance_probability(beta, delta) == pytest.approx(fwd, rel=1e-12)


def test_step_preserves_invariants(rng):
    g = random_gnm(10, 15, rng)
    for beta in (0.0, 0.5, 5.0):
        for _ in range(500):
            acc = step(g, beta, rng)
            assert g.edge_count == 15
            assert sum(g.degrees()) == 30
            if beta == 0.0:
                assert acc


def test_every_state_reachable():
    adj = reachable_states(4, 3)
    assert len(adj) == 20
    start = next(iter(adj))
    seen, stack = {start}, [start]
    while stack:
        for t in adj[stack.pop()]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    assert len(seen) == 20
    assert all(s in adj[t] for s in adj for t in adj[s])


class TestEnumerate:
    def test_uniform(self):
        law = enumerate_exact(4, 3, 0.0)
        assert len(law) == 20
        assert all(p == pytest.approx(1 / 20) for p in law.values())

    def test_low_temperature(self):
        law = enumerate_exact(4, 3, 5.0)
        paths = {k: p for k, p in law.items() if sum(d * d for d in _degrees(4, k)) == 10}
        assert len(paths) == 12
        assert all(p == pytest.approx(1 / 12, rel=1e-3) for p in paths.values())
        assert all(p < 1e-4 for k, p in law.items() if k not in paths)
        assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)

    def test_triangle(self):
        assert enumerate_exact(3, 3, 1.0) == {((0, 1), (0, 2), (1, 2)): 1.0}

    def test_guard(self):
        with pytest.raises(CapacityError):
            enumerate_exact(12, 20, 1.0)


def _degrees(n, edges):
    d = [0] * n
    for u, v in edges:
        d[u] += 1
        d[v] += 1
    return d


class TestChain:
    def test_determinism_and_validity(self):
        cfg = ChainConfig(0.7, 12, 20, 5000, burn_in=1000, thinning=400, seed=99)
        a, b = run_chain(cfg), run_chain(cfg)
        assert np.array_equal(a.snapshots, b.snapshots)
        assert np.array_equal(a.energy_trace, b.energy_trace)
        assert len(a.snapshots) == 10
        for g in a.graphs():
            assert g.edge_count == 20
        assert len(a.energy_trace) == cfg.steps + 1
        assert a.energy_trace[0] == energy(a.initial)
        assert a.energy_trace[-1] == energy(a.final)

    def test_trace_matches_snapshots(self):
        cfg = ChainConfig(0.4, 9, 12, 300, burn_in=0, thinning=1, seed=5)
        res = run_chain(cfg)
        for k, g in enumerate(res.graphs()):
            assert energy(g) == res.energy_trace[k + 1]

    def test_config_validation(self):
        for bad in (
            ChainConfig(-1.0, 5, 3, 10, 0, 1),
            ChainConfig(1.0, 5, 11, 10, 0, 1),
            ChainConfig(1.0, 5, 0, 10, 0, 1),
            ChainConfig(1.0, 5, 3, 10, 20, 1),
            ChainConfig(1.0, 5, 3, 10, 0, 0),
            ChainConfig(1.0, 5, 3, 10, 0, 1, seed=-1),
        ):
            with pytest.raises(InputError):
                run_chain(bad)

    def test_defaults(self):
        r = ChainConfig(1.0, 50, 100, 10**6).resolved()
        assert r.burn_in == default_burn_in(100) == 20 * 100 * 5
        assert r.thinning == default_thinning(100) == 200

    def test_replicas_use_mixed_seeds(self):
        cfg = ChainConfig(1.0, 8, 10, 200, burn_in=0, thinning=50, seed=3)
        reps = run_replicas(cfg, 3)
        assert [r.config.seed for r in reps] == [mix64(3, i) for i in range(3)]
        assert len({r.snapshots.tobytes() for r in reps}) == 3
        assert mix64(3, 0) != mix64(4, 0) and 0 <= mix64(3, 0) < 2**64

    @pytest.mark.parametrize("beta, tol", [(0.3, 0.02), (0.0, 0.01)])
    def test_matches_exact_law(self, beta, tol):
        burn = 10_000
        res = run_chain(ChainConfig(beta, 4, 3, 10**6 + burn, burn_in=burn, thinning=1, seed=11))
        assert tv_distance(empirical_law(res.snapshots, 4), enumerate_exact(4, 3, beta)) <= tol

    def test_tv_shrinks_with_length(self):
        exact = enumerate_exact(4, 3, 0.3)
        tvs = []
        for steps in (10**4, 10**5, 10**6):
            vals = []
            for seed in range(4):
                res = run_chain(ChainConfig(0.3, 4, 3, steps, burn_in=0, thinning=1, seed=seed))
                vals.append(tv_distance(empirical_law(res.snapshots, 4), exact))
            tvs.append(np.mean(vals))
        assert tvs[0] > tvs[1] > tvs[2]

    def test_generic_empirical_law_path(self):
        res = run_chain(ChainConfig(0.0, 12, 3, 2000, burn_in=0, thinning=1, seed=1))
        law = empirical_law(res.snapshots, 12)
        assert sum(law.values()) == pytest.approx(1.0)
        assert all(len(k) == 3 for k in law)

    def test_low_energy_pull(self):
        g = sample_erg(200, 600, 1.0, seed=2)
        er = random_gnm(200, 600, np.random.default_rng(2))
        assert g.edge_count == 600
        assert np.var(g.degrees()) < np.var(er.degrees())
