"""Independent LP solutions of the guessing problems.

Nothing here calls the closed forms in :mod:`certify`; every routine
builds the raw strategy program and solves it by vertex enumeration or by
the dense simplex in :mod:`_simplex`.
"""

from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from ._accel import njit, pick_backend
from ._simplex import OPTIMAL, _solve, _solve_jit, solve_lp
from .errors import InfeasibleStats, ScaleExceeded
from .model import MixedSource, StrategyMix

MAX_MIXED_COMPONENTS = 64
MAX_SUPPORT = 16
MAX_PHOTONS = 12

STRATEGIES = ("N", "Y", "H", "notH")


# ---------------------------------------------------------------------------
# simple source: exact basic-solution enumeration


def _solve_square(rows, rhs, tol):
    """Solve a small (possibly overdetermined) system by Gauss-Jordan elimination.

    Works on floats or Fractions.  Returns None when the system is
    inconsistent or the solution is not unique.
    """
    m, k = len(rows), len(rows[0])
    M = [list(r) + [v] for r, v in zip(rows, rhs)]
    piv_row = 0
    pivots = []
    for col in range(k):
        best = None
        for r in range(piv_row, m):
            if abs(M[r][col]) > tol and (best is None or abs(M[r][col]) > abs(M[best][col])):
                best = r
        if best is None:
            return None
        M[piv_row], M[best] = M[best], M[piv_row]
        pv = M[piv_row][col]
        M[piv_row] = [v / pv for v in M[piv_row]]
        for r in range(m):
            if r != piv_row and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[piv_row])]
        pivots.append(col)
        piv_row += 1
    for r in range(piv_row, m):
        if abs(M[r][k]) > tol:
            return None
    return [M[i][k] for i in range(k)]


def solve_simple_lp(p, alpha, beta, include_notH=True, tol=None):
    """Maximize the guessing probability over the four strategies, by enumeration.

    Accepts floats or :class:`fractions.Fraction` (then the solve is exact).
    Returns ``(g_star, StrategyMix)``.
    """
    exact = tol is None and not isinstance(p, float) and not isinstance(alpha, float)
    if tol is None:
        tol = 0 if exact else 1e-12
    one = p - p + 1
    g = max(p, one - p)
    cols = {
        "N": (one, 0 * one, 0 * one, one),
        "Y": (one, one, one, one),
        "H": (one, p, 0 * one, g),
        "notH": (one, one - p, one, g),
    }
    names = list(STRATEGIES if include_notH else STRATEGIES[:3])
    rhs = (one, alpha, beta)
    best, best_x = None, None
    for k in (1, 2, 3):
        for sub in combinations(names, k):
            rows = [[cols[s][r] for s in sub] for r in range(3)]
            x = _solve_square(rows, rhs, tol)
            if x is None or any(v < -tol for v in x):
                continue
            val = sum(cols[s][3] * v for s, v in zip(sub, x))
            if best is None or val > best:
                best = val
                best_x = dict(zip(sub, x))
    if best is None:
        raise InfeasibleStats(f"(alpha, beta) = ({alpha}, {beta}) unreachable with p = {p}")
    lam = [float(max(best_x.get(s, 0), 0)) for s in STRATEGIES]
    total = sum(lam)
    lam = [v / total for v in lam]
    return best, StrategyMix(*lam)


# ---------------------------------------------------------------------------
# mixtures: dense simplex


def mixed_program(gamma, p, alpha, beta, include_notH=True):
    """(c, A, b) of the strategy LP for a mixture; variables grouped per component."""
    gamma = np.asarray(gamma, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    k = gamma.size
    s = 4 if include_notH else 3
    g = np.maximum(p, 1.0 - p)
    c = np.zeros(k * s)
    A = np.zeros((k + 2, k * s))
    for i in range(k):
        base = i * s
        A[i, base:base + s] = 1.0
        c[base + 0] = gamma[i]
        c[base + 1] = gamma[i]
        c[base + 2] = gamma[i] * g[i]
        A[k, base + 1] = gamma[i]
        A[k, base + 2] = gamma[i] * p[i]
        A[k + 1, base + 1] = gamma[i]
        if include_notH:
            c[base + 3] = gamma[i] * g[i]
            A[k, base + 3] = gamma[i] * (1.0 - p[i])
            A[k + 1, base + 3] = gamma[i]
    b = np.concatenate([np.ones(k), [alpha, beta]])
    return c, A, b


def solve_mixed_lp(source: MixedSource, alpha, beta, include_notH=True, backend=None):
    """Solve the known-mixture strategy LP; returns ``(g_star, StrategyMix)``."""
    k = len(source)
    if k > MAX_MIXED_COMPONENTS:
        raise ScaleExceeded(f"{k} components exceed the oracle limit of {MAX_MIXED_COMPONENTS}")
    c, A, b = mixed_program(source.gamma, source.p, alpha, beta, include_notH)
    status, x, val = solve_lp(c, A, b, backend=backend)
    if status != OPTIMAL:
        raise InfeasibleStats(f"(alpha, beta) = ({alpha}, {beta}) unreachable for this mixture")
    s = 4 if include_notH else 3
    lam = x.reshape(k, s)
    lam = lam / lam.sum(axis=1, keepdims=True)
    notH = lam[:, 3] if include_notH else np.zeros(k)
    return val, StrategyMix(lam[:, 0], lam[:, 1], lam[:, 2], notH)


# ---------------------------------------------------------------------------
# mean-only constraint


def _program3(gamma, p, alpha, beta):
    k = gamma.size
    c = np.zeros(k * 4)
    A = np.zeros((k + 2, k * 4))
    for i in range(k):
        g = max(p[i], 1.0 - p[i])
        base = i * 4
        for s in range(4):
            A[i, base + s] = 1.0
        c[base] = gamma[i]
        c[base + 1] = gamma[i]
        c[base + 2] = gamma[i] * g
        c[base + 3] = gamma[i] * g
        A[k, base + 1] = gamma[i]
        A[k, base + 2] = gamma[i] * p[i]
        A[k, base + 3] = gamma[i] * (1.0 - p[i])
        A[k + 1, base + 1] = gamma[i]
        A[k + 1, base + 3] = gamma[i]
    b = np.zeros(k + 2)
    b[:k] = 1.0
    b[k] = alpha
    b[k + 1] = beta
    return c, A, b


def _build_bruteforce(jit):
    wrap = (lambda f: njit(f, cache=False)) if jit else (lambda f: f)
    program = wrap(_program3)
    solve = _solve_jit if jit else _solve

    @wrap
    def inner(gam, pp, alpha, beta, best):
        c, A, b = program(gam, pp, alpha, beta)
        st, x, v = solve(c, A, b)
        if st == 0 and v > best:
            return v
        return best

    def run(mu, pi, alpha, beta, support_max, steps):
        n = support_max + 1
        p = 1.0 - pi ** np.arange(n).astype(np.float64)
        best = -1.0
        # single point: needs an integer mean
        for i in range(n):
            if abs(i - mu) <= 1e-12:
                best = inner(np.array([1.0]), np.array([p[i]]), alpha, beta, best)
        # two points: weights fixed by the two equalities
        for i in range(n):
            for j in range(i + 1, n):
                wj = (mu - i) / (j - i)
                if wj < -1e-12 or wj > 1 + 1e-12:
                    continue
                wj = min(max(wj, 0.0), 1.0)
                best = inner(np.array([1.0 - wj, wj]), np.array([p[i], p[j]]), alpha, beta, best)
        # three points: grid on the middle weight, outer two repaired exactly
        gam = np.zeros(3)
        pp = np.zeros(3)
        for i in range(n):
            if i > mu:
                break
            for l in range(i + 1, n):
                if l < mu:
                    continue
                pp[0] = p[i]
                pp[2] = p[l]
                for j in range(i + 1, l):
                    pp[1] = p[j]
                    for t in range(1, steps):
                        wj = t / steps
                        wl = (mu - j * wj - i * (1.0 - wj)) / (l - i)
                        wi = 1.0 - wj - wl
                        if wl < -1e-12 or wi < -1e-12:
                            continue
                        gam[0] = max(wi, 0.0)
                        gam[1] = wj
                        gam[2] = max(wl, 0.0)
                        best = inner(gam, pp, alpha, beta, best)
        return best

    return wrap(run)


_mean_bruteforce = _build_bruteforce(False)
_mean_bruteforce_jit = _build_bruteforce(True)


def solve_mean_constraint_bruteforce(mu, pi, alpha, beta, support_max=12, grid=1e-3, backend=None):
    """Grid search over photon-number distributions with mean exactly ``mu``.

    Supports of up to three points in {0..support_max} are scanned; on three
    points the middle weight runs over a grid of step ``grid`` and the outer
    two are solved from the normalization and mean equalities.  Each
    candidate mixture is handed to the full four-strategy LP.  The result is
    a lower bound on the true optimum.
    """
    if support_max > MAX_SUPPORT:
        raise ScaleExceeded(f"support_max {support_max} exceeds {MAX_SUPPORT}")
    if support_max < 0 or mu < 0 or not (0 < pi < 1) or not (0 < grid <= 1):
        raise ValueError("invalid brute-force parameters")
    steps = int(round(1.0 / grid))
    run = _mean_bruteforce_jit if pick_backend(backend) == "numba" else _mean_bruteforce
    best = run(float(mu), float(pi), float(alpha), float(beta), int(support_max), steps)
    if best < 0:
        raise InfeasibleStats("no grid distribution reproduces the statistics")
    return float(best)


def solve_mean_constraint_lp(mu, pi, alpha, beta, support_max=40, backend=None):
    """Exact joint LP over photon numbers {0..support_max} with mean exactly ``mu``.

    Variables are the joint weights of (photon number, strategy); the
    program is linear in them, so this is exact for the truncated support.
    """
    n = support_max + 1
    p = 1.0 - pi ** np.arange(n, dtype=np.float64)
    g = np.maximum(p, 1.0 - p)
    c = np.zeros(4 * n)
    A = np.zeros((4, 4 * n))
    for i in range(n):
        sl = slice(4 * i, 4 * i + 4)
        c[sl] = (1.0, 1.0, g[i], g[i])
        A[0, sl] = 1.0
        A[1, sl] = i
        A[2, sl] = (0.0, 1.0, p[i], 1.0 - p[i])
        A[3, sl] = (0.0, 1.0, 0.0, 1.0)
    b = np.array([1.0, mu, alpha, beta])
    status, x, val = solve_lp(c, A, b, backend=backend)
    if status != OPTIMAL:
        raise InfeasibleStats("statistics unreachable on the truncated support")
    return val


# ---------------------------------------------------------------------------
# n-photon response functions


def response_function_columns(n, pi):
    """Click probabilities of every subset response on n photons.

    Returns (p_open, click_closed) arrays over the 2**(n+1) subsets C of
    {0..n}: the device clicks when the number of transmitted photons is in C.
    """
    k = np.arange(n + 1)
    pmf = np.array([math.comb(n, i) * (1 - pi) ** i * pi ** (n - i) for i in k])
    masks = np.arange(2 ** (n + 1))
    member = (masks[:, None] >> k[None, :]) & 1
    return member @ pmf, member[:, 0].astype(np.float64)


def bruteforce_response_functions(n, pi, alpha, beta, backend=None):
    """Optimum over all deterministic photon-number responses of an n-photon pulse."""
    if n > MAX_PHOTONS:
        raise ScaleExceeded(f"n = {n} exceeds {MAX_PHOTONS}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    pc, closed = response_function_columns(n, pi)
    c = np.maximum(pc, 1.0 - pc)
    A = np.vstack([np.ones_like(pc), pc, closed])
    b = np.array([1.0, alpha, beta])
    status, x, val = solve_lp(c, A, b, backend=backend)
    if status != OPTIMAL:
        raise InfeasibleStats("statistics unreachable with these response functions")
    return val
