"""Randomized closed-form versus oracle comparisons.

Instances are generated by drawing a source and a strategy mix and taking
the statistics they produce, so every instance is feasible by construction.
"""

from __future__ import annotations

import time

import numpy as np

from .certify import (
    certify_known_distribution,
    certify_mean_constraint,
    certify_simple,
)
from .errors import GuardExceeded
from .model import MeanConstrainedSource, MixedSource, SimpleSource
from .oracle import (
    bruteforce_response_functions,
    solve_mean_constraint_bruteforce,
    solve_mean_constraint_lp,
    solve_mixed_lp,
    solve_simple_lp,
)

SCOPES = ("simple", "mixed", "mean", "photon")
TOLERANCE = {"simple": 1e-8, "mixed": 1e-8, "mean": 1e-8, "photon": 1e-10}


def random_simple_instance(rng, with_notH=True):
    p = float(rng.uniform(0.01, 0.99))
    lam = rng.dirichlet(np.ones(4 if with_notH else 3))
    lam = np.append(lam, 0.0) if lam.size == 3 else lam
    a = lam[1] + lam[2] * p + lam[3] * (1 - p)
    b = lam[1] + lam[3]
    return p, float(a), float(b)


def random_mixed_instance(rng, max_components=10, with_notH=True):
    k = int(rng.integers(1, max_components + 1))
    gamma = rng.dirichlet(np.ones(k))
    p = rng.uniform(0.0, 1.0, size=k)
    src = MixedSource(gamma, p)
    lam = rng.dirichlet(np.ones(4 if with_notH else 3), size=k)
    if lam.shape[1] == 3:
        lam = np.hstack([lam, np.zeros((k, 1))])
    a = src.gamma @ (lam[:, 1] + lam[:, 2] * src.p + lam[:, 3] * (1 - src.p))
    b = src.gamma @ (lam[:, 1] + lam[:, 3])
    return src, float(a), float(b)


def random_mean_instance(rng, max_photon=8, mu_max=3.0):
    """(mu, pi, alpha, beta) produced by a random distribution on <= 3 photon numbers."""
    while True:
        sup = np.sort(rng.choice(np.arange(max_photon + 1), size=3, replace=False))
        mu = float(rng.uniform(0.1, min(mu_max, sup[2])))
        if not sup[0] <= mu <= sup[2]:
            continue
        wj = rng.uniform(0, 1)
        wl = (mu - sup[1] * wj - sup[0] * (1 - wj)) / (sup[2] - sup[0])
        wi = 1 - wj - wl
        if wl < 0 or wi < 0:
            continue
        pi = float(rng.uniform(0.05, 0.95))
        gam = np.array([wi, wj, wl])
        pp = 1 - pi ** sup
        lam = rng.dirichlet(np.ones(3), size=3)
        a = float(gam @ (lam[:, 1] + lam[:, 2] * pp))
        b = float(gam @ lam[:, 1])
        return mu, pi, a, b


def mean_optimum_support(result, beta):
    """Photon numbers carrying weight in the optimal mean-constraint solution."""
    sup = set(result.details.get("support", ()))
    if 1.0 - sum(result.details.get("weights", ())) > 1e-9:
        sup.add(0)
    return sorted(sup)


def run_oracle_check(scope, instances, seed=0):
    """Compare closed forms against oracles on random instances; returns a report dict."""
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}")
    if instances < 1:
        raise ValueError("need at least one instance")
    rng = np.random.default_rng(seed)
    deltas = []
    extra = {}
    t0 = time.perf_counter()
    if scope == "simple":
        for _ in range(instances):
            p, a, b = random_simple_instance(rng)
            closed = certify_simple(SimpleSource(p), a, b).g_star
            deltas.append(abs(closed - solve_simple_lp(p, a, b, include_notH=True)[0]))
    elif scope == "mixed":
        for _ in range(instances):
            src, a, b = random_mixed_instance(rng)
            closed = certify_known_distribution(src, a, b).g_star
            deltas.append(abs(closed - solve_mixed_lp(src, a, b, include_notH=True)[0]))
    elif scope == "mean":
        # one-sided: the oracles are lower bounds on the supremum
        grid_gap = []
        guard = 0
        for _ in range(instances):
            mu, pi, a, b = random_mean_instance(rng)
            try:
                closed = certify_mean_constraint(MeanConstrainedSource(mu, pi), a, b).g_star
            except GuardExceeded as exc:
                closed = exc.upper_bound
                guard += 1
            lp = solve_mean_constraint_lp(mu, pi, a, b, support_max=40)
            grid = solve_mean_constraint_bruteforce(mu, pi, a, b, support_max=12, grid=1e-2)
            deltas.append(max(lp - closed, grid - closed, 0.0))
            grid_gap.append(closed - grid)
        extra["max_closed_minus_grid"] = float(max(grid_gap))
        extra["guard_bounds"] = guard
    else:
        for _ in range(instances):
            n = int(rng.integers(0, 11))
            pi = float(rng.uniform(0.05, 0.95))
            p = 1 - pi ** n
            lam = rng.dirichlet(np.ones(4))
            a = float(lam[1] + lam[2] * p + lam[3] * (1 - p))
            b = float(lam[1] + lam[3])
            brute = bruteforce_response_functions(n, pi, a, b)
            deltas.append(abs(brute - solve_simple_lp(p, a, b)[0]))
    worst = float(max(deltas))
    return {
        "scope": scope,
        "instances": instances,
        "seed": seed,
        "max_delta": worst,
        "tolerance": TOLERANCE[scope],
        "passed": worst <= TOLERANCE[scope],
        "seconds": round(time.perf_counter() - t0, 3),
        **extra,
    }
