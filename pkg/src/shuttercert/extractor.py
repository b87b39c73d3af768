"""Toeplitz hashing with leftover-hash output sizing and batch cutoff selection.

Convention: for input length n and output length m the matrix entry is
``T[j, k] = seed[j - k + n - 1]``, so column k is the length-m seed window
starting at ``n - 1 - k``.  The product over GF(2) is therefore the XOR of
the windows selected by the set bits of the input.  Seeds are bit arrays of
length ``n + m - 1``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit, pick_backend
from .errors import InsufficientEntropy, LengthMismatch, SeedReuseExceeded

__all__ = [
    "DEFAULT_DELTA_LOG2",
    "DEFAULT_MAX_REUSE",
    "ExtractorConfig",
    "ToeplitzHasher",
    "output_length",
    "toeplitz_hash",
    "optimize_cutoff",
    "make_seed",
    "seed_digest",
    "pack_bits",
    "unpack_bits",
]

DEFAULT_DELTA_LOG2 = -100.0
# total distance budget 1e-10 spread over uses at 2^-100 each
DEFAULT_MAX_REUSE = int(1e-10 * 2.0 ** 100)


def output_length(n, per_bit_entropy, delta_log2=DEFAULT_DELTA_LOG2):
    """Leftover-hash output size floor(n*h + 2*log2(delta))."""
    if not (0.0 <= per_bit_entropy <= 1.0 + 1e-12):
        raise ValueError("per-bit entropy must lie in [0, 1]")
    if delta_log2 >= 0:
        raise ValueError("delta_log2 must be negative")
    m = math.floor(n * per_bit_entropy + 2.0 * delta_log2)
    if m < 1:
        raise InsufficientEntropy(
            f"n={n}, h={per_bit_entropy:.6g} leaves no output at delta=2^{delta_log2:g}"
        )
    return int(m)


def pack_bits(bits) -> bytes:
    """LSB-first packing; a trailing partial byte is zero-padded."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def unpack_bits(data, count=None) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8), bitorder="little")
    return bits if count is None else bits[:count]


def _words(bits, nwords):
    """Pack a bit array into ``nwords`` little-endian uint64 words (zero padded)."""
    buf = np.zeros(nwords * 64, dtype=np.uint8)
    buf[: bits.size] = bits[: nwords * 64]
    return np.packbits(buf, bitorder="little").view("<u8").copy()


def _shifted_seed(seed, nwords):
    """64 word-packed copies of the seed, copy r starting at seed bit r."""
    out = np.empty((64, nwords), dtype=np.uint64)
    for r in range(64):
        out[r] = _words(seed[r:], nwords)
    return out


@njit
def _xor_windows_jit(shifted, offsets, nwords):
    acc = np.zeros(nwords, dtype=np.uint64)
    for t in range(offsets.size):
        o = offsets[t]
        row = shifted[o & 63]
        q = o >> 6
        for w in range(nwords):
            acc[w] ^= row[q + w]
    return acc


def _xor_windows_np(shifted, offsets, nwords, chunk=2048):
    acc = np.zeros(nwords, dtype=np.uint64)
    cols = np.arange(nwords)
    for s in range(0, offsets.size, chunk):
        o = offsets[s:s + chunk]
        block = shifted[(o & 63)[:, None], (o >> 6)[:, None] + cols[None, :]]
        acc ^= np.bitwise_xor.reduce(block, axis=0)
    return acc


class ToeplitzHasher:
    """Reusable hasher for one seed; precomputes the shifted seed words.

    ``max_reuse`` caps how many inputs one seed may hash; each call to
    :meth:`hash` counts one use.
    """

    def __init__(self, seed, n, m, max_reuse=DEFAULT_MAX_REUSE, backend=None):
        seed = np.asarray(seed, dtype=np.uint8).ravel()
        if n < 1 or m < 1:
            raise LengthMismatch("hash dimensions must be positive")
        if seed.size != n + m - 1:
            raise LengthMismatch(f"seed has {seed.size} bits, need n + m - 1 = {n + m - 1}")
        if np.any(seed > 1):
            raise ValueError("seed must be a 0/1 array")
        self.n, self.m = int(n), int(m)
        self.max_reuse = max_reuse
        self.uses = 0
        self.backend = backend
        self.out_words = (self.m + 63) // 64
        # room for the deepest window: offset up to n-1 plus out_words words
        self._nwords = (self.n - 1) // 64 + self.out_words + 1
        self._shifted = _shifted_seed(seed, self._nwords)
        self.digest = seed_digest(seed)

    def hash(self, bits) -> np.ndarray:
        x = np.asarray(bits, dtype=np.uint8).ravel()
        if x.size != self.n:
            raise LengthMismatch(f"input has {x.size} bits, hasher expects {self.n}")
        if self.max_reuse is not None and self.uses >= self.max_reuse:
            raise SeedReuseExceeded(f"seed already used {self.uses} times")
        self.uses += 1
        offsets = (self.n - 1 - np.flatnonzero(x)).astype(np.int64)
        if pick_backend(self.backend) == "numba":
            acc = _xor_windows_jit(self._shifted, offsets, self.out_words)
        else:
            acc = _xor_windows_np(self._shifted, offsets, self.out_words)
        out = np.unpackbits(acc.astype("<u8").view(np.uint8), bitorder="little")
        return out[: self.m]


def toeplitz_hash(bits, seed, m, backend=None) -> np.ndarray:
    """One-shot ``T @ bits`` over GF(2) for a seed of length n + m - 1."""
    x = np.asarray(bits, dtype=np.uint8).ravel()
    return ToeplitzHasher(seed, x.size, m, max_reuse=None, backend=backend).hash(x)


def make_seed(master_seed, n, m) -> np.ndarray:
    """Deterministic Toeplitz seed bits derived from a master seed."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, 0x5EED])
    return np.random.default_rng(ss).integers(0, 2, size=n + m - 1, dtype=np.uint8)


def seed_digest(seed) -> str:
    """SHA-256 hex of the packed seed bytes."""
    return hashlib.sha256(pack_bits(seed)).hexdigest()


def optimize_cutoff(entropies, n, delta_log2=DEFAULT_DELTA_LOG2):
    """Entropy cutoff maximizing (batches kept) x (bits per batch).

    Every distinct batch entropy is a candidate; cutoffs that leave no output
    score zero.  Ties go to the higher cutoff.  Returns ``(cutoff, total)``
    with ``cutoff = None`` when nothing can be extracted.
    """
    h = np.asarray(entropies, dtype=np.float64)
    if h.size == 0:
        raise ValueError("need at least one batch entropy")
    finite = h[np.isfinite(h)]
    best_h, best_total = None, 0
    for cand in np.unique(finite):
        try:
            m = output_length(n, min(float(cand), 1.0), delta_log2)
        except InsufficientEntropy:
            continue
        total = int(np.count_nonzero(h >= cand)) * m
        if total >= best_total and total > 0:
            best_h, best_total = float(cand), total
    return best_h, best_total


@dataclass(frozen=True)
class ExtractorConfig:
    input_length: int
    output_length: int
    toeplitz_seed: np.ndarray = field(repr=False)
    delta_log2: float = DEFAULT_DELTA_LOG2

    def __post_init__(self):
        if self.delta_log2 >= 0:
            raise ValueError("delta_log2 must be negative")
        if self.output_length < 1:
            raise InsufficientEntropy("output length must be at least 1")
        seed = np.asarray(self.toeplitz_seed, dtype=np.uint8).ravel()
        if seed.size != self.input_length + self.output_length - 1:
            raise LengthMismatch("seed length must be n + m - 1")
        object.__setattr__(self, "toeplitz_seed", seed)

    @classmethod
    def for_entropy(cls, n, per_bit_entropy, master_seed, delta_log2=DEFAULT_DELTA_LOG2):
        m = output_length(n, per_bit_entropy, delta_log2)
        return cls(n, m, make_seed(master_seed, n, m), delta_log2)

    def hasher(self, **kwargs) -> ToeplitzHasher:
        return ToeplitzHasher(self.toeplitz_seed, self.input_length, self.output_length, **kwargs)
