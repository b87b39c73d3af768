"""Batch post-processing: estimate, certify, pick a cutoff, hash."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ._accel import thread_cap
from .certify import certify, poisson_mixture
from .errors import GuardExceeded, InfeasibleStats
from .extractor import (
    DEFAULT_DELTA_LOG2,
    ToeplitzHasher,
    make_seed,
    optimize_cutoff,
    output_length,
)
from .model import Assumption, MeanConstrainedSource, MixedSource, SimpleSource
from .sampling import estimate_stats

log = logging.getLogger(__name__)

__all__ = [
    "BatchResult",
    "PipelineReport",
    "certify_batch",
    "certify_batches",
    "extract_batches",
    "process_batches",
    "assumption_models",
    "monobit_sanity",
    "MONOBIT_LIMIT",
]

DEFAULT_Y_LENGTH = 83000
MONOBIT_LIMIT = 4.0
REASONS = ("below-cutoff", "infeasible-stats", "short-batch")

_MODEL_FOR = {
    Assumption.SIMPLE: SimpleSource,
    Assumption.KNOWN: MixedSource,
    Assumption.MEAN: MeanConstrainedSource,
}


@dataclass
class BatchResult:
    batch: int
    n_alpha: int
    t_alpha: int
    n_beta: int
    t_beta: int
    alpha_hat: float
    beta_hat: float
    g_star: float
    h: float
    feasible: bool
    n_gen: int = 0
    bound_only: bool = False
    reason: Optional[str] = None

    def cert_row(self):
        return {k: getattr(self, k) for k in ("batch", "n_alpha", "t_alpha", "n_beta", "t_beta",
                                              "alpha_hat", "beta_hat", "g_star", "h", "feasible")}


@dataclass
class PipelineReport:
    assumption: str
    batches: list
    n_fixed: int
    delta_log2: float
    cutoff: Optional[float] = None
    m: int = 0
    used: list = field(default_factory=list)
    discards: dict = field(default_factory=dict)
    surplus_discarded: int = 0
    extracted_bits: int = 0
    seed_sha256: Optional[str] = None
    monobit_z: Optional[float] = None
    bits: np.ndarray = field(default=None, repr=False)

    @property
    def batches_used(self) -> int:
        return len(self.used)

    @property
    def entropies(self) -> np.ndarray:
        return np.array([b.h for b in self.batches])

    def manifest(self):
        return {
            "assumption": self.assumption,
            "n": self.n_fixed,
            "m": self.m,
            "h": self.cutoff,
            "delta_log2": self.delta_log2,
            "seed_sha256": self.seed_sha256,
            "bit_count": self.extracted_bits,
            "batches_used": list(self.used),
            "discards": {k: list(v) for k, v in self.discards.items()},
            "surplus_discarded": self.surplus_discarded,
            "monobit_z": self.monobit_z,
        }

    def to_dict(self):
        d = self.manifest()
        d["batches"] = [asdict(b) for b in self.batches]
        return d


def monobit_sanity(bits) -> float:
    """Standardized ones-count deviation (ones - n/2) / sqrt(n/4)."""
    b = np.asarray(bits).ravel()
    n = b.size
    if n < 1000:
        raise ValueError("monobit check needs at least 1000 bits")
    ones = int(np.count_nonzero(b))
    return (ones - n / 2) / math.sqrt(n / 4)


def certify_batch(batch, index, model, epsilon, clamp=False) -> BatchResult:
    """Estimate and certify one batch; infeasible statistics yield h = 0."""
    counts = batch.counts()
    n_gen = int(len(batch) - batch.round_type.sum())
    if counts[0] == 0 or counts[2] == 0:
        return BatchResult(index, *counts, 0.0, 1.0, 1.0, 0.0, False, n_gen, reason="infeasible-stats")
    n_a, t_a, n_b, t_b = counts
    # the margins must shrink the gap toward the diagonal; below the diagonal
    # that means estimating in the complement frame
    flipped = t_a * n_b < t_b * n_a
    if flipped:
        st = estimate_stats((n_a, n_a - t_a, n_b, n_b - t_b), epsilon)
    else:
        st = estimate_stats(counts, epsilon)
    a, b = st.alpha_hat, st.beta_hat
    bound_only = False
    g, ok = 1.0, True
    if a > b:
        try:
            g = certify(model, a, b, clamp=clamp).g_star
        except InfeasibleStats:
            g, ok = 1.0, False
        except GuardExceeded as exc:
            # weak-duality bound is still sound
            g, bound_only = exc.upper_bound, True
    if flipped:
        a, b = 1.0 - a, 1.0 - b
    h = -math.log2(g) + 0.0 if g > 0 else math.inf
    return BatchResult(index, *counts, a, b, g, h, ok, n_gen, bound_only,
                       None if ok else "infeasible-stats")


def certify_batches(batches, model, epsilon=1e-6, clamp=False, threads=None):
    threads = thread_cap() if threads is None else max(1, int(threads))
    work = list(enumerate(batches))
    if threads == 1 or len(work) < 2:
        return [certify_batch(b, i, model, epsilon, clamp) for i, b in work]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: certify_batch(t[1], t[0], model, epsilon, clamp), work))


def extract_batches(batches, results, n_fixed=DEFAULT_Y_LENGTH, delta_log2=DEFAULT_DELTA_LOG2,
                    master_seed=0, assumption="", backend=None) -> PipelineReport:
    """Choose the cutoff over eligible batches and Toeplitz-hash the survivors.

    ``results`` may be :class:`BatchResult` objects or certificate rows.
    Each survivor contributes its first ``n_fixed`` generation bits; the rest
    are dropped and counted as surplus.
    """
    rows = [r if isinstance(r, BatchResult) else BatchResult(**r) for r in results]
    if len(rows) != len(batches):
        raise ValueError(f"{len(rows)} certificates for {len(batches)} batches")
    discards = {k: [] for k in REASONS}
    eligible = []
    for r, b in zip(rows, batches):
        n_gen = int(len(b) - b.round_type.sum())
        r.n_gen = n_gen
        if not r.feasible:
            r.reason = "infeasible-stats"
        elif n_gen < n_fixed:
            r.reason = "short-batch"
        else:
            r.reason = None
            eligible.append(r)
        if r.reason:
            discards[r.reason].append(r.batch)
    report = PipelineReport(assumption, rows, n_fixed, delta_log2, discards=discards)
    if not eligible:
        report.bits = np.zeros(0, dtype=np.uint8)
        return report
    cutoff, _ = optimize_cutoff([r.h for r in eligible], n_fixed, delta_log2)
    if cutoff is None:
        for r in eligible:
            r.reason = "below-cutoff"
            discards["below-cutoff"].append(r.batch)
        report.bits = np.zeros(0, dtype=np.uint8)
        return report
    m = output_length(n_fixed, min(cutoff, 1.0), delta_log2)
    seed = make_seed(master_seed, n_fixed, m)
    hasher = ToeplitzHasher(seed, n_fixed, m, backend=backend)
    out = []
    for r in eligible:
        if r.h < cutoff:
            r.reason = "below-cutoff"
            discards["below-cutoff"].append(r.batch)
            continue
        gen = batches[r.batch].generation_bits()
        report.surplus_discarded += gen.size - n_fixed
        out.append(hasher.hash(gen[:n_fixed]))
        report.used.append(r.batch)
    for v in discards.values():
        v.sort()
    report.cutoff = cutoff
    report.m = m
    report.seed_sha256 = hasher.digest
    report.bits = np.concatenate(out) if out else np.zeros(0, dtype=np.uint8)
    report.extracted_bits = int(report.bits.size)
    if report.bits.size >= 1000:
        z = monobit_sanity(report.bits)
        report.monobit_z = z
        if abs(z) > MONOBIT_LIMIT:
            warnings.warn(f"extracted output fails the monobit check (z = {z:.2f})", RuntimeWarning,
                          stacklevel=2)
    return report


def process_batches(batches, assumption, model, epsilon=1e-6, delta_log2=DEFAULT_DELTA_LOG2,
                    n_fixed=DEFAULT_Y_LENGTH, master_seed=0, clamp=False, threads=None,
                    backend=None) -> PipelineReport:
    """Full post-processing of a list of :class:`RoundBatch`."""
    tag = Assumption.parse(assumption)
    if not isinstance(model, _MODEL_FOR[tag]):
        raise TypeError(f"{tag.value} certification needs a {_MODEL_FOR[tag].__name__}")
    batches = list(batches)
    results = certify_batches(batches, model, epsilon, clamp, threads)
    for r in results:
        if not r.feasible:
            log.info("batch %d discarded: infeasible statistics", r.batch)
    return extract_batches(batches, results, n_fixed, delta_log2, master_seed, tag.value, backend)


def assumption_models(mu, pi, p_simple=None, tail_epsilon=1e-12):
    """Matched models for the three trust levels of a photonic source.

    The simple model treats every pulse as a single photon (p = 1 - pi)
    unless ``p_simple`` is given; the known model is Poissonian with mean
    ``mu``; the mean-only model keeps just ``mu``.
    """
    return {
        Assumption.SIMPLE: SimpleSource(1.0 - pi if p_simple is None else p_simple),
        Assumption.KNOWN: poisson_mixture(mu, pi, tail_epsilon),
        Assumption.MEAN: MeanConstrainedSource(mu, pi),
    }
