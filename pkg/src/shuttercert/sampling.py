"""Hoeffding-adjusted click-rate estimates and test-round allocation."""

from __future__ import annotations

import math

import numpy as np

from .certify import certify
from .errors import GuardExceeded, InfeasibleStats
from .model import Assumption, MeanConstrainedSource, MixedSource, ObservedStats, SimpleSource

__all__ = ["hoeffding_margin", "estimate_stats", "allocation_grid", "allocation_objective",
           "optimize_test_allocation", "monte_carlo_coverage"]


def hoeffding_margin(n, epsilon):
    """One-sided Hoeffding half-width sqrt(ln(1/eps) / 2n)."""
    if n < 1:
        raise ValueError("need at least one round")
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    return math.sqrt(math.log(1.0 / epsilon) / (2.0 * n))


def estimate_stats(counts, epsilon) -> ObservedStats:
    """Conservative (alpha_hat, beta_hat) from (n_alpha, t_alpha, n_beta, t_beta).

    alpha is pushed down and beta up, each by its Hoeffding margin, so the
    true pair is at least as far from the diagonal as the estimate with
    probability >= (1 - eps)^2.
    """
    n_a, t_a, n_b, t_b = (int(v) for v in counts)
    if n_a < 1 or n_b < 1:
        raise ValueError("each shutter setting needs at least one test round")
    if not (0 <= t_a <= n_a and 0 <= t_b <= n_b):
        raise ValueError("click counts must lie within the round counts")
    a = t_a / n_a - hoeffding_margin(n_a, epsilon)
    b = t_b / n_b + hoeffding_margin(n_b, epsilon)
    return ObservedStats(
        n_alpha=n_a, t_alpha=t_a, n_beta=n_b, t_beta=t_b,
        alpha_hat=min(max(a, 0.0), 1.0),
        beta_hat=min(max(b, 0.0), 1.0),
        epsilon=float(epsilon),
        confidence=(1.0 - epsilon) ** 2,
    )


def allocation_grid(N):
    """Candidate per-side test counts ceil(N / 2^k), k >= 2, largest first."""
    out = []
    k = 2
    while True:
        n = math.ceil(N / 2 ** k)
        if out and n == out[-1]:
            break
        out.append(n)
        if n <= 1:
            break
        k += 1
    return out


def allocation_objective(N, n_test, prior_alpha, prior_beta, epsilon, model):
    """Expected extractable entropy per batch with n_test rounds on each side."""
    n_gen = N - 2 * n_test
    if n_gen <= 0:
        return 0.0
    da = hoeffding_margin(n_test, epsilon)
    a = min(max(prior_alpha - da, 0.0), 1.0)
    b = min(max(prior_beta + da, 0.0), 1.0)
    if a <= b:
        return 0.0
    try:
        res = certify(model, a, b)
    except (InfeasibleStats, GuardExceeded):
        return 0.0
    return res.per_bit_entropy * n_gen


_MODEL_FOR = {
    Assumption.SIMPLE: SimpleSource,
    Assumption.KNOWN: MixedSource,
    Assumption.MEAN: MeanConstrainedSource,
}


def optimize_test_allocation(N, prior_alpha, prior_beta, epsilon, certifier, model):
    """Best equal split (n_alpha = n_beta) on the geometric grid.

    Ties go to fewer test rounds.  ``certifier`` is the assumption tag and
    must match the model type.
    """
    if N < 1:
        raise ValueError("batch size must be positive")
    expected = _MODEL_FOR[Assumption.parse(certifier)]
    if not isinstance(model, expected):
        raise TypeError(f"{certifier} certification needs a {expected.__name__}")
    grid = allocation_grid(N)
    scores = [allocation_objective(N, n, prior_alpha, prior_beta, epsilon, model) for n in grid]
    best = max(scores)
    # smallest n among the maximizers
    n_star = min(n for n, s in zip(grid, scores) if s == best)
    return n_star, n_star


def monte_carlo_coverage(alpha, beta, n_alpha, n_beta, epsilon, trials, seed=0):
    """Fraction of simulated test sets whose one-sided regions hold the true pair.

    Coverage means alpha_hat <= alpha and beta_hat >= beta simultaneously.
    """
    rng = np.random.default_rng(seed)
    ta = rng.binomial(n_alpha, alpha, size=trials)
    tb = rng.binomial(n_beta, beta, size=trials)
    a_hat = np.clip(ta / n_alpha - hoeffding_margin(n_alpha, epsilon), 0.0, 1.0)
    b_hat = np.clip(tb / n_beta + hoeffding_margin(n_beta, epsilon), 0.0, 1.0)
    return float(np.mean((a_hat <= alpha) & (b_hat >= beta)))
