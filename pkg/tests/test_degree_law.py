import math

import mpmath as mp
import numpy as np
import pytest
from scipy import stats

from ergo import DegreeSequence, InputError
from ergo.degree_law import (
    calibrate_gamma,
    concentration_report,
    default_alphas,
    log_pmf,
    make_params,
    moments,
    pmf,
    psi,
    rejection_acceptance,
    sample_conditioned_degrees,
    target_total,
    x_gamma,
    x_gamma_exact,
)

mp.mp.dps = 50


def mp_terms(beta, gamma, n, upto):
    L = mp.log(n)
    return [mp.e ** (-beta * j * j + gamma * j * L) / mp.factorial(j) for j in range(upto)]


def mp_moments(beta, gamma, n, upto=200):
    t = mp_terms(mp.mpf(beta), mp.mpf(gamma), mp.mpf(n), upto)
    F = mp.fsum(t)
    mean = mp.fsum(j * w for j, w in enumerate(t)) / F
    var = mp.fsum((j - mean) ** 2 * w for j, w in enumerate(t)) / F
    return F, mean, var, t


def test_small_case_matches_high_precision_series():
    p = make_params(0.5, 1.0, 100)
    F, mean, var, t = mp_moments(0.5, 1.0, 100)
    m = moments(p)
    assert m.F == pytest.approx(float(F), rel=1e-9)
    assert m.mean == pytest.approx(float(mean), rel=1e-9)
    assert m.variance == pytest.approx(float(var), rel=1e-9)
    k = p.k_gamma
    for j in range(max(0, k - 3), k + 4):
        assert pmf(j, p) == pytest.approx(float(t[j] / F), rel=1e-11)


def test_mode_is_k_gamma_and_first_ratio_drop():
    for beta in (0.3, 0.5, 1.0, 2.0):
        for gamma in (0.2, 1.0, 2.5):
            for n in (10, 100, 1e4):
                p = make_params(beta, gamma, n)
                probs = p.probabilities()
                assert int(np.argmax(probs)) == p.k_gamma
                L = math.log(n)
                ratios = [math.exp(-(2 * j + 1) * beta + gamma * L) / (j + 1) for j in range(p.window)]
                assert p.k_gamma == next(j for j, r in enumerate(ratios) if r <= 1)
                assert -beta - 1e-12 <= p.alpha <= beta + 1e-12


def test_ratio_tail_bound_over_window():
    for beta, c, n in [(0.5, 2, 1e3), (1.0, 1, 1e4), (2.0, 3, 1e3)]:
        p = calibrate_gamma(beta, c, n)
        lp = log_pmf(np.arange(p.window + 1), p)
        k = p.k_gamma
        for j in range(-k, p.window - k + 1):
            assert lp[k + j] - lp[k] <= -beta * abs(j) * (abs(j) - 1) + 1e-9
            if j != 0:  # the squared form is weaker only away from the mode
                assert lp[k + j] - lp[k] <= -beta * (abs(j) - 1) ** 2 + 1e-9


def test_pmf_normalised():
    p = calibrate_gamma(1.0, 2.0, 1000)
    j = np.arange(p.window + 1)
    assert abs(pmf(j, p).sum() - 1.0) <= 1e-12


def test_closed_form_x_gamma():
    assert x_gamma(1, 1, math.exp(10)) == pytest.approx(0.5 * (10 + math.log(10) + 0.5), abs=1e-12)
    assert x_gamma(1, 1, math.exp(10)) == pytest.approx(6.40129, abs=1e-5)
    xs = [x_gamma(0.7, g, 500) for g in np.linspace(0.1, 5, 20)]
    assert all(a < b for a, b in zip(xs, xs[1:]))
    with pytest.raises(InputError):
        x_gamma(1, 1, 1.5)


def test_exact_root_solves_mode_equation():
    for beta, gamma, n in [(1, 1, 1e6), (0.5, 2, 100), (2, 0.1, 10)]:
        x = x_gamma_exact(beta, gamma, n)
        h = mp.findroot(lambda y: -mp.log(y + 1) - (2 * y + 1) * beta + gamma * mp.log(n), x)
        assert x == pytest.approx(float(h), abs=1e-10)


@pytest.mark.xfail(strict=True, reason="closed form misses the exact root by ~3 at n=1e6; see decisions ledger")
def test_closed_form_close_to_exact_root():
    assert abs(x_gamma(1, 1, 1e6) - x_gamma_exact(1, 1, 1e6)) < 0.1


def test_psi():
    assert psi(0.0, 0.7) == pytest.approx(1.0, abs=1e-15)
    for th in (0.3, 1.7, 4.0):
        assert psi(th, 1.3) == pytest.approx(psi(-th, 1.3), rel=1e-13)
    js = range(-200, 201)
    num = mp.fsum(mp.e ** (mp.mpf(0.5) * j - j * j) for j in js)
    den = mp.fsum(mp.e ** (-j * j) for j in js)
    assert psi(0.5, 1.0) == pytest.approx(float(num / den), rel=1e-12)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("c", [1.0, 2.0, 3.0])
def test_calibration(beta, c):
    for n in (1e3, 1e4):
        p = calibrate_gamma(beta, c, n)
        m = moments(p)
        assert abs(m.mean - c * math.log(n)) <= 1e-6
        assert abs(m.mean - p.k_gamma) <= 5
        assert 0.05 <= m.variance <= 20
        assert math.isfinite(p.log_F)


def test_calibration_monotone_and_deterministic():
    a, b = calibrate_gamma(1, 2, 1000), calibrate_gamma(1, 3, 1000)
    assert b.gamma > a.gamma
    assert calibrate_gamma(1, 2, 1000) == a


def test_variance_bounded_across_n():
    vs = [moments(calibrate_gamma(1.0, 2.0, n)).variance for n in (1e2, 1e4, 1e6)]
    assert all(0.2 <= v <= 0.6 for v in vs)
    ks = [(calibrate_gamma(1.0, 2.0, n), n) for n in (1e3, 1e6)]
    assert all(abs(moments(p).mean - p.k_gamma) <= 5 for p, _ in ks)


def test_mgf_close_to_shifted_discrete_gaussian():
    # E[e^{theta D}] e^{-theta k} against psi(theta + alpha) / psi(alpha), a finite-n check only
    p = calibrate_gamma(1.0, 2.0, 1e4)
    j = np.arange(p.window + 1)
    probs = p.probabilities()
    for th in (-0.5, 0.25, 0.5):
        lhs = float(np.dot(probs, np.exp(th * (j - p.k_gamma))))
        rhs = psi(th + p.alpha, 1.0) / psi(p.alpha, 1.0)
        assert lhs == pytest.approx(rhs, rel=0.1)


def test_target_total():
    assert target_total(2, 1000) == 2 * round(2 * 1000 * math.log(1000) / 2)
    assert target_total(1, 3) % 2 == 0


def test_conditioned_degrees_sum(rng):
    p = calibrate_gamma(1.0, 2.0, 200)
    total = target_total(2.0, 200)
    for _ in range(5):
        d = sample_conditioned_degrees(p, total, rng)
        assert d.total == total and d.n == 200
    with pytest.raises(InputError):
        sample_conditioned_degrees(p, total + 1, rng)


def test_exchange_fallback_hits_total(rng):
    p = calibrate_gamma(1.0, 2.0, 200)
    total = target_total(2.0, 200) + 40  # far in the tail, rejection gives up immediately
    d = sample_conditioned_degrees(p, total, rng, max_rejections=1)
    assert d.total == total


def test_conditioned_marginal_chi_square(rng):
    n = 200
    p = calibrate_gamma(1.0, 2.0, n)
    total = target_total(2.0, n)
    first = np.array([sample_conditioned_degrees(p, total, rng).degrees[0] for _ in range(10_000)])
    # the oracle is the exact one-coordinate conditional law: pmf(j) * P(S_{n-1} = total - j) / P(S_n = total)
    probs = p.probabilities()
    conv = np.array([1.0])
    for _ in range(n - 1):
        conv = np.convolve(conv, probs)
        conv /= conv.sum()
    cond = np.array([probs[j] * conv[total - j] if 0 <= total - j < len(conv) else 0.0 for j in range(len(probs))])
    cond /= cond.sum()
    support = np.flatnonzero(cond * len(first) >= 5)
    obs = np.array([np.count_nonzero(first == j) for j in support], dtype=float)
    exp = cond[support] * len(first)
    obs = np.append(obs, len(first) - obs.sum())
    exp = np.append(exp, len(first) - exp.sum())
    keep = exp > 0
    assert stats.chisquare(obs[keep], exp[keep] * obs[keep].sum() / exp[keep].sum()).pvalue > 0.01


def test_rejection_rate_ratio_small(rng):
    p1, p2 = calibrate_gamma(1, 2, 100), calibrate_gamma(1, 2, 400)
    r1 = rejection_acceptance(p1, target_total(2, 100), rng, 300)
    r2 = rejection_acceptance(p2, target_total(2, 400), rng, 300)
    assert r1.accepted == r2.accepted == 300
    assert 1.3 <= r1.rate / r2.rate <= 2.9


class TestConcentration:
    def test_constant_sequence(self):
        n, c = 1000, 2.0
        k = round(c * math.log(n))
        r = concentration_report(DegreeSequence.from_degrees([k] * n), c, n, 0.1, 0.1)
        assert r.in_A1 and r.max_pos_dev == 0 and r.max_neg_dev == 0

    def test_single_outlier(self):
        n = 10_000
        base = [10] * (n - 1)
        scale = math.sqrt(math.log(n))
        # solve for an outlier sitting 2 sqrt(ln n) above the resulting mean: x - (S + x)/n = 2 s
        x = (2 * scale + sum(base) / n) * n / (n - 1)
        d = DegreeSequence.from_degrees(base + [round(x)])
        r = concentration_report(d, 1.0, n, 1.0, 1.0)
        assert not r.in_A1
        assert r.max_pos_dev == pytest.approx(2.0, abs=0.5 / scale)

    def test_in_a2(self):
        assert not concentration_report(DegreeSequence.from_degrees([10, 1]), 1.0, 10, 1, 1).in_A2

    def test_window_equivalence(self, rng):
        for _ in range(200):
            d = DegreeSequence.from_degrees(rng.integers(0, 30, size=50))
            a1, a2 = rng.uniform(0.1, 8, size=2)
            r = concentration_report(d, 2.0, 50, a1, a2)
            assert r.in_A1 == (r.max_pos_dev <= math.sqrt(a2) and r.max_neg_dev <= math.sqrt(a1))

    def test_default_alphas(self):
        assert default_alphas(2.0) == (2.0, 2.0)
