"""Small statistical helpers shared by the Monte-Carlo estimators."""

from __future__ import annotations

from statsmodels.stats.proportion import proportion_confint


def wilson_interval(successes: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    lo, hi = proportion_confint(successes, trials, alpha=alpha, method="wilson")
    return max(0.0, float(lo)), min(1.0, float(hi))
