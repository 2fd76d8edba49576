"""Seeded random streams.

All randomness goes through numpy's Philox4x64 counter-based generator.
A stream is keyed by the user seed plus a tuple of integers naming the
substream (e.g. ``(trial,)``), via `numpy.random.SeedSequence`, so the
same key always yields the same draws regardless of call order.
"""

import numpy as np


def make_rng(seed, *stream) -> np.random.Generator:
    key = [int(seed)] + [int(s) for s in stream]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def trial_seed(seed, *keys) -> int:
    """A 63-bit integer seed derived from ``(seed, *keys)`` for per-trial calls."""
    ss = np.random.SeedSequence([int(seed)] + [int(k) for k in keys])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
