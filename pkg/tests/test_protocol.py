"""Protocol simulation for honest and adversarial detectors."""

import math

import numpy as np
import pytest

from shuttercert.model import GEN, TEST, MeanConstrainedSource, MixedSource, ProtocolConfig, RoundRecord, SimpleSource, StrategyMix
from shuttercert.protocol import (
    AdversarialDevice,
    HonestDevice,
    RoundBatch,
    adversary_guess_rate,
    run_batches,
    run_protocol,
)


def within(rate, p, n, k=3.0):
    return abs(rate - p) <= k * math.sqrt(p * (1 - p) / n) + 1e-12


class TestHonest:
    def test_all_generation(self):
        b = run_protocol(ProtocolConfig(50000, 0.0, rng_seed=1), HonestDevice(SimpleSource(0.5)))
        assert b.round_type.sum() == 0 and b.x.sum() == 0
        assert within(b.y.mean(), 0.5, 50000)

    def test_closed_shutter_rate(self):
        dev = HonestDevice(SimpleSource(0.5), eta=0.9, dark=0.01, extinction=0.02)
        b = run_protocol(ProtocolConfig(100000, 1.0, rng_seed=2), dev)
        closed = b.y[b.x == 1]
        expected = 1 - (1 - 0.5 * 0.02 * 0.9) * (1 - 0.01)
        assert within(closed.mean(), expected, closed.size)
        assert within(b.x.mean(), 0.5, b.x.size)
        opened = b.y[b.x == 0]
        assert within(opened.mean(), 1 - (1 - 0.45) * 0.99, opened.size)

    def test_determinism(self):
        cfg = ProtocolConfig(20000, 0.1, rng_seed=99)
        dev = HonestDevice(MeanConstrainedSource(1.06, 0.4882))
        a, b = run_protocol(cfg, dev, 3), run_protocol(cfg, dev, 3)
        assert a.encode().tobytes() == b.encode().tobytes()
        assert a.encode().tobytes() != run_protocol(cfg, dev, 4).encode().tobytes()

    def test_poisson_click_rate(self):
        b = run_protocol(ProtocolConfig(100000, 0.0, rng_seed=5), HonestDevice(MeanConstrainedSource(1.06, 0.4882)))
        assert within(b.y.mean(), 1 - math.exp(-1.06 * (1 - 0.4882)), b.y.size)

    def test_threads_do_not_change_output(self):
        cfg = ProtocolConfig(5000, 0.2, rng_seed=4)
        dev = HonestDevice(SimpleSource(0.3))
        one = run_batches(cfg, dev, 4, threads=1)
        many = run_batches(cfg, dev, 4, threads=3)
        assert all(np.array_equal(x.encode(), y.encode()) for x, y in zip(one, many))

    def test_records(self):
        b = run_protocol(ProtocolConfig(200, 0.5, rng_seed=3), HonestDevice(SimpleSource(0.5)))
        recs = list(b)
        assert len(recs) == 200 and all(isinstance(r, RoundRecord) for r in recs)
        assert all(r.x == 0 for r in recs if r.round_type == GEN)
        assert b[0] == recs[0]
        again = RoundBatch.decode(b.encode())
        assert np.array_equal(again.y, b.y) and np.array_equal(again.round_type, b.round_type)

    def test_decode_rejects_bad_codes(self):
        with pytest.raises(ValueError):
            RoundBatch.decode(np.array([0b1000], dtype=np.uint8))
        with pytest.raises(ValueError):
            RoundBatch.decode(np.array([0b010], dtype=np.uint8))


class TestAdversarial:
    def _run(self, p, lam, n=100000, q=0.08, seed=1):
        dev = AdversarialDevice(SimpleSource(p), StrategyMix(*lam), seed=seed)
        return dev, run_protocol(ProtocolConfig(n, q, rng_seed=seed), dev)

    def test_always_click(self):
        dev, b = self._run(0.5, (0, 1, 0, 0))
        assert adversary_guess_rate(dev, b) == 1.0

    def test_honest_coin(self):
        dev, b = self._run(0.5, (0, 0, 1, 0))
        n = int((b.round_type == GEN).sum())
        assert within(adversary_guess_rate(dev, b), 0.5, n)

    def test_mixed_strategy(self):
        dev, b = self._run(0.5, (0.3, 0.3, 0.4, 0.0))
        n = int((b.round_type == GEN).sum())
        assert within(adversary_guess_rate(dev, b), 0.8, n)

    def test_stats_reproduced(self):
        lam = (0.2, 0.1, 0.5, 0.2)
        dev, b = self._run(0.7, lam, n=200000, q=1.0)
        na, ta, nb, tb = b.counts()
        a, bb = StrategyMix(*lam).stats(0.7)
        assert within(ta / na, a, na, 4) and within(tb / nb, bb, nb, 4)

    def test_mixture_components(self):
        src = MixedSource([0.3, 0.7], [0.2, 0.9])
        lam = StrategyMix([0.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 0.0])
        dev = AdversarialDevice(src, lam, seed=2)
        b = run_protocol(ProtocolConfig(100000, 0.0, rng_seed=2), dev)
        assert within(b.component.mean(), 0.7, b.component.size)
        assert within(adversary_guess_rate(dev, b), 0.3 * 0.8 + 0.7 * 0.9, len(b))

    def test_component_count_checked(self):
        with pytest.raises(ValueError):
            AdversarialDevice(MixedSource([0.5, 0.5], [0.1, 0.2]), StrategyMix(1, 0, 0, 0))
        with pytest.raises(TypeError):
            AdversarialDevice(MeanConstrainedSource(1, 0.5), StrategyMix(1, 0, 0, 0))

    def test_guess_rate_needs_hidden_draws(self):
        b = run_protocol(ProtocolConfig(100, 0.1), HonestDevice(SimpleSource(0.5)))
        with pytest.raises(ValueError):
            adversary_guess_rate(AdversarialDevice(SimpleSource(0.5), StrategyMix(1, 0, 0, 0)), b)

    def test_test_rounds_flagged(self):
        _, b = self._run(0.5, (0, 0, 1, 0), n=1000, q=1.0)
        assert (b.round_type == TEST).all()
