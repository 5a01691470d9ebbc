"""Deterministic, order-free random streams.

Every stream is a Philox (counter-based) generator keyed by a root seed and a
tuple of integers, so results never depend on worker count or call order.
"""

from __future__ import annotations

import numpy as np

# stream tags, used as the first element of a spawn key
STATE = 0
MQFI_RESTART = 1
REE_START = 2
SEPARABLE = 3
BOOTSTRAP = 4
SHUFFLE = 5
SUBSAMPLE = 6
SWEEP = 7

_MASK64 = (1 << 64) - 1


def derive_seed(root: int, *key: int) -> int:
    """A 64-bit seed derived from ``root`` and an integer key path."""
    ss = np.random.SeedSequence(int(root) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator(root: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(root) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def state_seed(master_seed: int, state_id: int) -> int:
    return derive_seed(master_seed, STATE, state_id)
