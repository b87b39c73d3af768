"""Shared value types and the strategy-polytope feasibility predicate."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import EmptySupport

SUM_TOL = 1e-12


class Assumption(str, enum.Enum):
    SIMPLE = "Simple"
    KNOWN = "KnownDistribution"
    MEAN = "MeanConstraint"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "simple": cls.SIMPLE,
            "known": cls.KNOWN,
            "knowndistribution": cls.KNOWN,
            "known-distribution": cls.KNOWN,
            "mean": cls.MEAN,
            "meanconstraint": cls.MEAN,
            "mean-constraint": cls.MEAN,
        }
        if key not in aliases:
            raise ValueError(f"unknown assumption {value!r}")
        return aliases[key]


def _check_prob(name, value):
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SimpleSource:
    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        _check_prob("p", self.p)

    @property
    def g(self) -> float:
        """Honest-device guessing probability max(p, 1-p)."""
        return max(self.p, 1.0 - self.p)


@dataclass(frozen=True)
class MixedSource:
    """Mixture of simple sources, stored sorted by nondecreasing ``p``.

    Unsorted input is reordered (weights follow their ``p``).
    """

    gamma: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64).ravel().copy()
        p = np.asarray(self.p, dtype=np.float64).ravel().copy()
        if g.shape != p.shape or g.size == 0:
            raise ValueError("gamma and p must be nonempty and of equal length")
        if np.any(~np.isfinite(g)) or np.any(g < 0):
            raise ValueError("weights must be finite and nonnegative")
        if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
            raise ValueError("signal probabilities must lie in [0, 1]")
        total = g.sum()
        if total <= 0:
            raise EmptySupport("all mixture weights are zero")
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        order = np.argsort(p, kind="stable")
        g, p = g[order], p[order]
        g.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple], normalize: bool = False):
        g = np.array([float(a) for a, _ in pairs])
        p = np.array([float(b) for _, b in pairs])
        if normalize:
            s = g.sum()
            if s <= 0:
                raise EmptySupport("all mixture weights are zero")
            g = g / s
        return cls(g, p)

    def __len__(self):
        return self.gamma.size

    @property
    def components(self):
        return list(zip(self.gamma.tolist(), self.p.tolist()))

    @property
    def plus(self) -> np.ndarray:
        """Indices of components with p > 1/2 (S+)."""
        return np.flatnonzero(self.p > 0.5)

    @property
    def minus(self) -> np.ndarray:
        return np.flatnonzero(self.p <= 0.5)

    @property
    def mean_p(self) -> float:
        return float(self.gamma @ self.p)

    def max_gap(self, beta: float) -> float:
        """Largest reachable alpha - beta given beta.

        Putting the closed-shutter click mass on the lowest-p components and
        honest play on the rest is optimal, so the bound is the integral of
        p over the top (1 - beta) of the weight, filled greedily.
        """
        budget = 1.0 - beta
        out = 0.0
        for gi, pi in zip(self.gamma[::-1], self.p[::-1]):
            if budget <= 0:
                break
            take = min(gi, budget)
            out += take * pi
            budget -= take
        return out

    def __eq__(self, other):
        return (
            isinstance(other, MixedSource)
            and np.array_equal(self.gamma, other.gamma)
            and np.array_equal(self.p, other.p)
        )

    def __hash__(self):
        return hash((self.gamma.tobytes(), self.p.tobytes()))


@dataclass(frozen=True)
class MeanConstrainedSource:
    mu: float
    pi: float

    def __post_init__(self):
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "pi", float(self.pi))
        if not (self.mu >= 0) or not math.isfinite(self.mu):
            raise ValueError("mu must be finite and nonnegative")
        if not (0.0 < self.pi < 1.0):
            raise ValueError("pi must lie in (0, 1)")


SourceModel = Union[SimpleSource, MixedSource, MeanConstrainedSource]


@dataclass(frozen=True)
class ObservedStats:
    n_alpha: int
    t_alpha: int
    n_beta: int
    t_beta: int
    alpha_hat: float
    beta_hat: float
    epsilon: float
    confidence: float = 0.0

    def __post_init__(self):
        if not (0 <= self.t_alpha <= self.n_alpha and 0 <= self.t_beta <= self.n_beta):
            raise ValueError("click counts must not exceed round counts")
        _check_prob("alpha_hat", self.alpha_hat)
        _check_prob("beta_hat", self.beta_hat)

    @property
    def alpha_empirical(self) -> float:
        return self.t_alpha / self.n_alpha if self.n_alpha else 0.0

    @property
    def beta_empirical(self) -> float:
        return self.t_beta / self.n_beta if self.n_beta else 0.0


@dataclass(frozen=True)
class StrategyMix:
    """Response-strategy weights; each field is a scalar or a per-component array."""

    lambda_N: np.ndarray
    lambda_Y: np.ndarray
    lambda_H: np.ndarray
    lambda_notH: np.ndarray

    def __post_init__(self):
        arrs = [np.atleast_1d(np.asarray(getattr(self, k), dtype=np.float64)).copy()
                for k in ("lambda_N", "lambda_Y", "lambda_H", "lambda_notH")]
        shape = arrs[0].shape
        if any(a.shape != shape for a in arrs):
            raise ValueError("strategy arrays must share one shape")
        stack = np.stack(arrs)
        if np.any(stack < -SUM_TOL):
            raise ValueError("strategy weights must be nonnegative")
        if np.any(np.abs(stack.sum(axis=0) - 1.0) > SUM_TOL * 10):
            raise ValueError("strategy weights must sum to 1 per component")
        for k, a in zip(("lambda_N", "lambda_Y", "lambda_H", "lambda_notH"), arrs):
            a = np.clip(a, 0.0, None)
            a.setflags(write=False)
            object.__setattr__(self, k, a)

    @classmethod
    def pure(cls, name: str, k: int = 1):
        vals = {s: np.zeros(k) for s in ("N", "Y", "H", "notH")}
        vals[name] = np.ones(k)
        return cls(vals["N"], vals["Y"], vals["H"], vals["notH"])

    @property
    def n_components(self) -> int:
        return self.lambda_N.size

    def as_matrix(self) -> np.ndarray:
        """(k, 4) array with columns N, Y, H, notH."""
        return np.stack([self.lambda_N, self.lambda_Y, self.lambda_H, self.lambda_notH], axis=1)

    def stats(self, p, gamma=None):
        """(alpha, beta) produced by this mix on sources with signal probabilities ``p``."""
        p = np.broadcast_to(np.asarray(p, dtype=np.float64), self.lambda_N.shape)
        if gamma is None:
            gamma = np.full(p.shape, 1.0 / p.size)
        a = self.lambda_Y + self.lambda_H * p + self.lambda_notH * (1 - p)
        b = self.lambda_Y + self.lambda_notH
        return float(gamma @ a), float(gamma @ b)


@dataclass(frozen=True)
class CertificationResult:
    g_star: float
    assumption: Assumption
    feasible: bool = True
    witness: Optional[StrategyMix] = None
    degenerate: bool = False
    clamped: bool = False
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g = float(self.g_star)
        if not (0.0 <= g <= 1.0 + 1e-12):
            raise ValueError(f"g_star out of range: {g}")
        object.__setattr__(self, "g_star", min(g, 1.0))

    @property
    def per_bit_entropy(self) -> float:
        h = -math.log2(self.g_star) if self.g_star > 0 else math.inf
        return h + 0.0  # normalizes -0.0


@dataclass(frozen=True)
class ProtocolConfig:
    batch_size: int
    test_rate: float
    shutter_split: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.batch_size) < 1:
            raise ValueError("batch_size must be positive")
        if not (0.0 <= self.test_rate <= 1.0):
            raise ValueError("test_rate must lie in [0, 1]")
        _check_prob("shutter_split", self.shutter_split)
        object.__setattr__(self, "batch_size", int(self.batch_size))
        object.__setattr__(self, "rng_seed", int(self.rng_seed) & 0xFFFFFFFFFFFFFFFF)


TEST = 1
GEN = 0


@dataclass(frozen=True)
class RoundRecord:
    round_type: int
    x: int
    y: int

    def __post_init__(self):
        if self.round_type == GEN and self.x != 0:
            raise ValueError("generation rounds keep the shutter open")

    @property
    def is_test(self) -> bool:
        return self.round_type == TEST


def normalize_orientation(alpha, beta):
    """Map (alpha, beta) into the alpha >= beta half-plane.

    Below the diagonal the complement map (1 - alpha, 1 - beta) is applied,
    which swaps Never/Always and Honest/Dishonest and leaves g* unchanged.
    """
    if beta > alpha:
        return 1 - alpha, 1 - beta, True
    return alpha, beta, False


def feasible(alpha, beta, p, tol=0) -> bool:
    """Whether (alpha, beta) is reachable by a simple source with signal probability p."""
    a, b, _ = normalize_orientation(alpha, beta)
    return (0 <= b + tol) and (b <= a + tol) and (a <= p + b * (1 - p) + tol) and (a <= 1 + tol)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def in_strategy_hull(alpha, beta, p) -> bool:
    """Exact convex-hull membership of (alpha, beta) in conv{S_N, S_Y, S_H, S_notH}.

    Intended for ``Fraction`` inputs; floats work but inherit rounding.
    """
    pts = [(0, 0), (1, 1), (p, 0), (1 - p, 1)]
    pts = sorted(set(pts))
    q = (alpha, beta)
    if len(pts) < 3:
        (x0, y0), (x1, y1) = pts[0], pts[-1]
        if _cross((x0, y0), (x1, y1), q) != 0:
            return False
        return min(x0, x1) <= q[0] <= max(x0, x1) and min(y0, y1) <= q[1] <= max(y0, y1)
    lower, upper = [], []
    for pt in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    for pt in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        a, b = hull[0], hull[-1]
        if _cross(a, b, q) != 0:
            return False
        return min(a[0], b[0]) <= q[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= q[1] <= max(a[1], b[1])
    return all(_cross(hull[i], hull[(i + 1) % len(hull)], q) >= 0 for i in range(len(hull)))


def photon_signal_probability(pi, n):
    """Transmission probability 1 - pi**n of an n-photon pulse."""
    return 1.0 - pi ** n
