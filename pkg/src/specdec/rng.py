"""Seeded random streams with deterministic per-run splitting.

A campaign derives run i's stream from (master_seed, i) via SeedSequence, so
runs are statistically independent, reproducible in isolation, and insensitive
to execution order.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed) -> np.random.Generator:
    """Fresh generator for a master seed (or None for OS entropy)."""
    return np.random.default_rng(seed)


def split_rng(master_seed, index: int) -> np.random.Generator:
    """Independent child stream number ``index`` of ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))
