"""Guessing-probability bounds for the three trust levels.

All certifiers accept raw (alpha, beta); points below the diagonal are
mapped through the complement symmetry first.  Statistics outside the
reachable set raise :class:`InfeasibleStats` unless ``clamp=True``, in which
case alpha - beta is lowered to the largest reachable gap.  Lowering the gap
can only raise g*, so clamping never inflates the certified entropy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSource, GuardExceeded, InfeasibleStats
from .model import (
    SUM_TOL,
    Assumption,
    CertificationResult,
    MeanConstrainedSource,
    MixedSource,
    SimpleSource,
    normalize_orientation,
    photon_signal_probability,
)

__all__ = [
    "certify",
    "certify_simple",
    "certify_known_distribution",
    "certify_mean_constraint",
    "mean_constraint_max_gap",
    "three_point_candidates",
    "poisson_mixture",
    "photon_signal_probability",
    "default_guard",
]

CERT_TOL = 1e-12


def _check_stats(alpha, beta):
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


def _gap(alpha, beta, dmax, clamp, what):
    """Orientation-normalized gap d, possibly clamped to ``dmax``."""
    d = alpha - beta
    if d > dmax + CERT_TOL:
        if not clamp:
            raise InfeasibleStats(
                f"alpha - beta = {d:.6g} exceeds the reachable {dmax:.6g} for {what}"
            )
        return dmax, True
    return min(d, dmax) if d > dmax else d, False


def certify_simple(source: SimpleSource, alpha, beta, clamp=False) -> CertificationResult:
    """Optimal guessing probability for a single source with signal probability p."""
    _check_stats(alpha, beta)
    a, b, flipped = normalize_orientation(float(alpha), float(beta))
    p = source.p
    d, clamped = _gap(a, b, p * (1.0 - b), clamp, f"p={p}")
    info = {"flipped": flipped, "gap": d}
    if p <= 0.0 or p >= 1.0:
        warnings.warn(f"degenerate source p={p}: no entropy certifiable", DegenerateSource, stacklevel=2)
        return CertificationResult(1.0, Assumption.SIMPLE, True, degenerate=True, clamped=clamped, details=info)
    g = source.g
    gs = 1.0 - max(d, 0.0) * (1.0 - g) / p
    return CertificationResult(gs, Assumption.SIMPLE, True, clamped=clamped, details=info)


def certify_known_distribution(source: MixedSource, alpha, beta, clamp=False) -> CertificationResult:
    """Optimal guessing probability when the mixing weights are known exactly."""
    _check_stats(alpha, beta)
    a, b, flipped = normalize_orientation(float(alpha), float(beta))
    d, clamped = _gap(a, b, source.max_gap(b), clamp, "this mixture")
    info = {"flipped": flipped, "gap": d}
    if d <= 0.0:
        info["N"] = None
        return CertificationResult(1.0, Assumption.KNOWN, True, clamped=clamped, details=info)
    gam, p = source.gamma, source.p
    plus = np.flatnonzero(p > 0.5)
    gp = gam[plus] * p[plus]
    if gp.sum() <= d:
        info["N"] = 0
        gs = 1.0 - d + float(gam[plus] @ (2.0 * p[plus] - 1.0))
        return CertificationResult(gs, Assumption.KNOWN, True, clamped=clamped, details=info)
    tails = np.cumsum(gp[::-1])[::-1]
    ok = np.flatnonzero(tails >= d - CERT_TOL)
    k = int(ok[-1])
    pn = p[plus[k]]
    rest = plus[k + 1:]
    gs = 1.0 - d * (1.0 - pn) / pn + float(gam[rest] @ (p[rest] / pn - 1.0))
    info["N"] = int(plus[k])
    return CertificationResult(gs, Assumption.KNOWN, True, clamped=clamped, details=info)


def poisson_mixture(mu, pi, tail_epsilon=1e-12) -> MixedSource:
    """Poissonian photon-number mixture with the far tail folded onto p = 1."""
    if mu < 0 or not math.isfinite(mu):
        raise ValueError("mu must be finite and nonnegative")
    if tail_epsilon <= 0:
        raise ValueError("tail_epsilon must be positive")
    if mu == 0:
        return MixedSource([1.0], [0.0])
    weights = [math.exp(-mu)]
    tail = 1.0 - weights[0]
    i = 0
    while tail >= tail_epsilon:
        i += 1
        weights.append(weights[-1] * mu / i)
        tail = max(1.0 - math.fsum(weights), 0.0)
        if i > 100000:  # pragma: no cover - would need mu ~ 1e5
            break
    gam = np.array(weights)
    p = photon_signal_probability(pi, np.arange(len(weights), dtype=np.float64))
    if tail > 0:
        gam = np.append(gam, tail)
        p = np.append(p, 1.0)
    return MixedSource(gam / math.fsum(gam), p)


# ---------------------------------------------------------------------------
# mean-only constraint


def default_guard(mu) -> int:
    return 10 * int(math.ceil(mu)) + 64


@dataclass(frozen=True)
class MeanCandidate:
    """Three-point solution on photon numbers {0, N, N+1}."""

    N: int
    gamma_0: float
    gamma_N: float
    gamma_N1: float
    g_star: float
    feasible: bool


def three_point_candidates(source: MeanConstrainedSource, alpha, beta, n_max=None):
    """Three-point candidates {0, N, N+1} for N = 1..n_max.

    The vacuum weight absorbs everything not played honestly; a candidate is
    feasible when all three weights lie in [0, 1].  These candidates ignore
    beta apart from the gap, so they are exact only in part of the domain;
    :func:`certify_mean_constraint` solves the full problem.
    """
    a, b, _ = normalize_orientation(float(alpha), float(beta))
    d = a - b
    mu, pi = source.mu, source.pi
    n_max = default_guard(mu) if n_max is None else int(n_max)
    out = []
    for N in range(1, n_max + 1):
        pN, pN1 = pi ** N, pi ** (N + 1)
        den = (N + 1) * (1 - pN) - N * (1 - pN1)
        gN = ((N + 1) * d - (1 - pN1) * mu) / den
        gN1 = (mu - N * gN) / (N + 1)
        g0 = 1 - gN - gN1
        gs = 1 + d - (d + mu * (pN1 - pN)) / den
        ok = all(-SUM_TOL <= v <= 1 + SUM_TOL for v in (g0, gN, gN1))
        out.append(MeanCandidate(N, g0, gN, gN1, gs, ok))
    return out


def _mean_head(mu, pi, K):
    idx = np.arange(1, K + 1, dtype=np.float64)
    p = 1.0 - pi ** idx
    c = np.maximum(2.0 * p - 1.0, 0.0)
    return idx, p, c


def mean_constraint_max_gap(source: MeanConstrainedSource, beta, n_max=None):
    """Largest reachable alpha - beta at closed-shutter rate ``beta``."""
    mu, pi = source.mu, source.pi
    S = 1.0 - beta
    if mu <= 0 or S <= 0:
        return 0.0
    K = max(default_guard(mu) if n_max is None else int(n_max), int(math.ceil(mu / S)) + 2)
    idx, p, _ = _mean_head(mu, pi, K)
    best = float(np.max(p * np.minimum(S, mu / idx)))
    # both rows binding on the two indices bracketing mu / S (p is concave in i)
    t = mu / S
    i = int(math.floor(t))
    if 1 <= i < t:
        wj = (mu - i * S) / 1.0
        wi = S - wj
        best = max(best, p[i - 1] * wi + p[i] * wj)
    return best


def _vertices(d, mu, S, idx, p, c):
    """All basic feasible points of the reduced program.

    maximize  c.w  s.t.  p.w = d,  idx.w <= mu,  sum(w) <= S,  w >= 0.
    Yields (value, support, weights, binding) tuples.
    """
    K = idx.size
    tol = 1e-12
    out = []
    # singletons: only the gap row binding, or with one of the inequalities
    w = d / p
    ok = (idx * w <= mu + tol) & (w <= S + tol)
    for i in np.flatnonzero(ok):
        out.append((c[i] * w[i], (i,), (w[i],), "E"))
    if K < 2:
        return out
    I, J = np.triu_indices(K, 1)
    for rowname, q, rhs in (("EM", idx, mu), ("ES", np.ones(K), S)):
        det = p[I] * q[J] - p[J] * q[I]
        good = np.abs(det) > 1e-14
        with np.errstate(divide="ignore", invalid="ignore"):
            wi = (d * q[J] - rhs * p[J]) / det
            wj = (p[I] * rhs - q[I] * d) / det
        wi = np.where(good, wi, -1.0)
        wj = np.where(good, wj, -1.0)
        ok = good & (wi >= -tol) & (wj >= -tol)
        if rowname == "EM":
            ok &= wi + wj <= S + tol
        else:
            ok &= idx[I] * wi + idx[J] * wj <= mu + tol
        for k in np.flatnonzero(ok):
            a, bb = max(wi[k], 0.0), max(wj[k], 0.0)
            out.append((c[I[k]] * a + c[J[k]] * bb, (I[k], J[k]), (a, bb), rowname))
    if K >= 3:
        for i in range(K - 2):
            J, L = np.triu_indices(K - i - 1, 1)
            J = J + i + 1
            L = L + i + 1
            M = np.empty((J.size, 3, 3))
            M[:, 0, 0], M[:, 0, 1], M[:, 0, 2] = p[i], p[J], p[L]
            M[:, 1, 0], M[:, 1, 1], M[:, 1, 2] = idx[i], idx[J], idx[L]
            M[:, 2, :] = 1.0
            det = np.linalg.det(M)
            good = np.abs(det) > 1e-13
            if not good.any():
                continue
            rhs = np.broadcast_to(np.array([d, mu, S]), (int(good.sum()), 3))
            sol = np.linalg.solve(M[good], rhs[..., None])[..., 0]
            ok = np.all(sol >= -tol, axis=1)
            gi = np.flatnonzero(good)[ok]
            for k, s in zip(gi, sol[ok]):
                s = np.maximum(s, 0.0)
                trip = (i, J[k], L[k])
                out.append((float(c[list(trip)] @ s), trip, tuple(s), "EMS"))
    return out


def _duals(vertex, d, mu, S, idx, p, c):
    """Dual multipliers (u, v, s) complementary to a vertex."""
    _, sup, _, rows = vertex
    sup = list(sup)
    if rows == "E":
        i = sup[0]
        return c[i] / p[i], 0.0, 0.0
    if rows == "EM":
        A = np.array([[p[k], idx[k]] for k in sup])
        u, v = np.linalg.solve(A, c[sup])
        return u, v, 0.0
    if rows == "ES":
        A = np.array([[p[k], 1.0] for k in sup])
        u, s = np.linalg.solve(A, c[sup])
        return u, 0.0, s
    A = np.array([[p[k], idx[k], 1.0] for k in sup])
    u, v, s = np.linalg.solve(A, c[sup])
    return u, v, s


def _upper_bound(u, v, s, d, mu, S, idx, p, c, pi):
    """Weak-duality bound valid over every photon number, head and tail."""
    v = max(v, 0.0)
    s = max(s, 0.0)
    head = float(np.max(c - u * p - v * idx - s))
    K = idx.size
    p_next = 1.0 - pi ** (K + 1)
    cands = [p_next, 1.0]
    if p_next < 0.5:
        cands.append(0.5)
    tail = max(max(2 * q - 1, 0.0) - u * q for q in cands) - v * (K + 1) - s
    viol = max(head, tail, 0.0)
    return d * u + mu * v + S * (s + viol), head, tail


def certify_mean_constraint(source: MeanConstrainedSource, alpha, beta, n_max_guard=None,
                            clamp=False) -> CertificationResult:
    """Optimal guessing probability when only the mean photon number is known.

    The adversary may choose any photon-number distribution with mean mu
    (supremum semantics: mean surplus can sit on a vanishing weight).  With
    w_i the weight on photon number i played honestly, the problem reduces
    to a three-row program in w solved by exhaustive vertex enumeration over
    i <= guard; a dual certificate then proves no larger photon number helps.
    """
    _check_stats(alpha, beta)
    a, b, flipped = normalize_orientation(float(alpha), float(beta))
    mu, pi = source.mu, source.pi
    K = default_guard(mu) if n_max_guard is None else int(n_max_guard)
    if K < 1:
        raise ValueError("n_max_guard must be positive")
    dmax = mean_constraint_max_gap(source, b, K)
    d, clamped = _gap(a, b, dmax, clamp, f"mu={mu}, pi={pi}")
    info = {"flipped": flipped, "gap": d, "guard": K}
    if d <= 0.0:
        return CertificationResult(1.0, Assumption.MEAN, True, clamped=clamped, details=info)
    S = 1.0 - b
    idx, p, c = _mean_head(mu, pi, K)
    verts = _vertices(d, mu, S, idx, p, c)
    if not verts:
        raise GuardExceeded(f"no feasible photon-number support within guard {K}", upper_bound=1.0)
    vals = np.array([v[0] for v in verts])
    best = float(vals.max())
    ties = [verts[k] for k in np.flatnonzero(vals >= best - 1e-12)]
    ub = math.inf
    for vert in ties:
        try:
            u, v, s = _duals(vert, d, mu, S, idx, p, c)
        except np.linalg.LinAlgError:
            continue
        bound, _, _ = _upper_bound(u, v, s, d, mu, S, idx, p, c, pi)
        ub = min(ub, bound)
        if ub - best <= CERT_TOL:
            break
    g_best = 1.0 - d + best
    g_ub = min(1.0, 1.0 - d + ub)
    if not (ub - best <= CERT_TOL):
        raise GuardExceeded(
            f"photon numbers beyond {K} may improve the bound; safe upper bound {g_ub:.12g}",
            upper_bound=g_ub,
        )
    top = max(ties, key=lambda t: t[0])
    sup = tuple(int(idx[k]) for k in top[1])
    info["support"] = sup
    info["weights"] = tuple(float(w) for w in top[2])
    info["binding"] = top[3]
    info["upper_bound"] = float(g_ub)
    # consecutive pair with the mean binding is the three-point family {0, N, N+1}
    if top[3] == "EM" and sup[1] == sup[0] + 1 and p[top[1][0]] > 0.5:
        N = sup[0]
        pN, pN1 = pi ** N, pi ** (N + 1)
        den = (N + 1) * (1 - pN) - N * (1 - pN1)
        info["N"] = N
        g_best = 1 + d - (d + mu * (pN1 - pN)) / den
    return CertificationResult(min(g_best, 1.0), Assumption.MEAN, True, clamped=clamped, details=info)


def certify(model, alpha, beta, clamp=False, **kwargs) -> CertificationResult:
    """Dispatch on the source model type."""
    if isinstance(model, SimpleSource):
        return certify_simple(model, alpha, beta, clamp=clamp)
    if isinstance(model, MixedSource):
        return certify_known_distribution(model, alpha, beta, clamp=clamp)
    if isinstance(model, MeanConstrainedSource):
        return certify_mean_constraint(model, alpha, beta, clamp=clamp, **kwargs)
    raise TypeError(f"unsupported source model {type(model).__name__}")
