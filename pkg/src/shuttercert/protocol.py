"""Round-stream simulation for honest and adversarially programmed detectors."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ._accel import thread_cap
from .model import (
    GEN,
    TEST,
    MeanConstrainedSource,
    MixedSource,
    ProtocolConfig,
    RoundRecord,
    SimpleSource,
    StrategyMix,
)

__all__ = [
    "HonestDevice",
    "AdversarialDevice",
    "RoundBatch",
    "run_protocol",
    "run_batches",
    "adversary_guess_rate",
    "batch_seed",
]

# strategy codes for the hidden per-round record
S_N, S_Y, S_H, S_NOTH = 0, 1, 2, 3


def _prob(name, v):
    v = float(v)
    if not (0.0 <= v <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return v


def _signal(source, size, rng):
    """Per-round signal bits and the signal probability of the active component."""
    if isinstance(source, SimpleSource):
        p = np.full(size, source.p)
    elif isinstance(source, MixedSource):
        comp = rng.choice(len(source), size=size, p=source.gamma)
        p = source.p[comp]
    elif isinstance(source, MeanConstrainedSource):
        photons = rng.poisson(source.mu, size=size)
        p = 1.0 - source.pi ** photons
    else:
        raise TypeError(f"unsupported source {type(source).__name__}")
    return rng.random(size) < p


@dataclass(frozen=True)
class HonestDevice:
    """Physical detector: efficiency eta, dark-count and shutter-leak probabilities.

    A mean-constrained source is simulated as Poissonian in photon number.
    Noise terms combine with the signal by inclusive OR of independent events.
    """

    source: Union[SimpleSource, MixedSource, MeanConstrainedSource]
    eta: float = 1.0
    dark: float = 0.0
    extinction: float = 0.0

    def __post_init__(self):
        for k in ("eta", "dark", "extinction"):
            object.__setattr__(self, k, _prob(k, getattr(self, k)))

    def respond(self, x, rng):
        size = x.size
        sig = _signal(self.source, size, rng)
        det = rng.random(size) < self.eta
        leak = rng.random(size) < self.extinction
        dark = rng.random(size) < self.dark
        through = np.where(x == 1, leak, True)
        y = (sig & det & through) | dark
        return y.astype(np.uint8), None, None


@dataclass(frozen=True)
class AdversarialDevice:
    """Detector following a (per-component) strategy mix known to the adversary.

    ``seed`` drives the hidden component and strategy draws, modelling the
    randomness shared between device and adversary.
    """

    source: Union[SimpleSource, MixedSource]
    strategy: StrategyMix
    seed: int = 0

    def __post_init__(self):
        k = 1 if isinstance(self.source, SimpleSource) else len(self.source)
        if not isinstance(self.source, (SimpleSource, MixedSource)):
            raise TypeError("adversarial devices need a concrete simple or mixed source")
        if self.strategy.n_components != k:
            raise ValueError(f"strategy has {self.strategy.n_components} components, source {k}")

    @property
    def gamma(self):
        return np.ones(1) if isinstance(self.source, SimpleSource) else self.source.gamma

    @property
    def p(self):
        return np.array([self.source.p]) if isinstance(self.source, SimpleSource) else self.source.p

    def respond(self, x, rng):
        size = x.size
        gamma, p = self.gamma, self.p
        comp = rng.choice(gamma.size, size=size, p=gamma) if gamma.size > 1 else np.zeros(size, np.int64)
        lam = self.strategy.as_matrix()
        cum = np.cumsum(lam, axis=1)
        cum[:, -1] = 1.0
        u = rng.random(size)
        strat = (u[:, None] >= cum[comp][:, :-1]).sum(axis=1)
        sig = rng.random(size) < p[comp]
        y = np.zeros(size, dtype=bool)
        y |= strat == S_Y
        y |= (strat == S_H) & (x == 0) & sig
        y |= (strat == S_NOTH) & ((x == 1) | ~sig)
        return y.astype(np.uint8), comp.astype(np.int64), strat.astype(np.int8)


@dataclass
class RoundBatch:
    """Struct-of-arrays round stream; iterates as :class:`RoundRecord`."""

    round_type: np.ndarray
    x: np.ndarray
    y: np.ndarray
    component: Optional[np.ndarray] = None
    strategy: Optional[np.ndarray] = None
    test_rate: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.round_type.size

    def __getitem__(self, i):
        return RoundRecord(int(self.round_type[i]), int(self.x[i]), int(self.y[i]))

    def __iter__(self):
        for t, x, y in zip(self.round_type.tolist(), self.x.tolist(), self.y.tolist()):
            yield RoundRecord(t, x, y)

    def counts(self):
        """(n_alpha, t_alpha, n_beta, t_beta) over the test rounds."""
        test = self.round_type == TEST
        op = test & (self.x == 0)
        cl = test & (self.x == 1)
        return (int(op.sum()), int(self.y[op].sum()), int(cl.sum()), int(self.y[cl].sum()))

    def generation_bits(self) -> np.ndarray:
        return self.y[self.round_type == GEN]

    def encode(self) -> np.ndarray:
        """One byte per round: bit0 test, bit1 shutter, bit2 click."""
        return (self.round_type | (self.x << 1) | (self.y << 2)).astype(np.uint8)

    @classmethod
    def decode(cls, codes, test_rate=float("nan")):
        codes = np.asarray(codes, dtype=np.uint8)
        if np.any(codes & 0xF8):
            raise ValueError("reserved bits set in round record")
        rt = codes & 1
        x = (codes >> 1) & 1
        if np.any((rt == GEN) & (x == 1)):
            raise ValueError("generation round with closed shutter")
        return cls(rt.astype(np.uint8), x.astype(np.uint8), ((codes >> 2) & 1).astype(np.uint8),
                   test_rate=test_rate)


def batch_seed(seed, batch_index):
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(batch_index)])


def run_protocol(config: ProtocolConfig, device, batch_index=0) -> RoundBatch:
    """Generate one batch of ``config.batch_size`` rounds; deterministic in the seeds."""
    N = config.batch_size
    rng = np.random.default_rng(batch_seed(config.rng_seed, batch_index))
    test = rng.random(N) < config.test_rate
    x = (test & (rng.random(N) < config.shutter_split)).astype(np.uint8)
    if isinstance(device, AdversarialDevice):
        dev_rng = np.random.default_rng(np.random.SeedSequence(
            [int(device.seed) & 0xFFFFFFFFFFFFFFFF, int(batch_index), 1]))
    else:
        dev_rng = rng
    y, comp, strat = device.respond(x, dev_rng)
    return RoundBatch(test.astype(np.uint8), x, y, comp, strat, test_rate=config.test_rate)


def run_batches(config: ProtocolConfig, device, n_batches, threads=None):
    """Independent batches with per-index seeds, in index order."""
    threads = thread_cap() if threads is None else max(1, int(threads))
    if threads == 1 or n_batches < 2:
        return [run_protocol(config, device, i) for i in range(n_batches)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run_protocol(config, device, i), range(n_batches)))


def adversary_guess_rate(device: AdversarialDevice, records: RoundBatch) -> float:
    """Success rate of the guesser who knows the hidden component and strategy.

    Never/Always are guessed exactly; honest play is guessed as the likelier
    outcome of the component, dishonest play as the opposite.
    """
    if records.strategy is None or records.component is None:
        raise ValueError("records carry no hidden strategy draws")
    gen = records.round_type == GEN
    if not gen.any():
        return float("nan")
    comp, strat, y = records.component[gen], records.strategy[gen], records.y[gen]
    likely = device.p[comp] >= 0.5
    guess = np.where(strat == S_H, likely, ~likely)
    guess[strat == S_N] = False
    guess[strat == S_Y] = True
    return float(np.mean(guess == y))
