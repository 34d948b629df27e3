"""Shared fixtures: seeded model instances kept small enough for enumeration."""

from __future__ import annotations

import numpy as np

from specdec import CondDist, Dist, FullModel, MarkovModel, ModelPair, random_model_pair


def seeded_small_pairs(count: int = 50, master: int = 2024) -> list[ModelPair]:
    """Deterministic battery of random Markov pairs with V <= 3 and T <= 4."""
    picker = np.random.default_rng(master)
    pairs = []
    for i in range(count):
        vocab = int(picker.integers(2, 4))
        horizon = int(picker.integers(1, 5))
        pairs.append(random_model_pair(vocab, horizon, seed=master * 1000 + i))
    return pairs


def random_dists(rng: np.random.Generator, size: int, count: int) -> list[np.ndarray]:
    raw = rng.uniform(size=(count, size))
    return list(raw / raw.sum(axis=1, keepdims=True))


def constant_chain(prompt_row: np.ndarray, row: np.ndarray, horizon: int) -> MarkovModel:
    """Chain whose every transition row equals ``row`` regardless of state."""
    table = np.tile(row, (len(row), 1))
    return MarkovModel(Dist(prompt_row), [CondDist(table)] * horizon)


def random_full_pair(vocab: int, horizon: int, seed: int) -> ModelPair:
    """Non-Markov pair: every history gets its own random conditional."""
    seq_p, seq_q = np.random.SeedSequence(seed).spawn(2)

    def build(seq):
        rng = np.random.default_rng(seq)

        def fn(n, history):
            raw = rng.uniform(size=vocab)
            return raw / raw.sum()

        return FullModel.from_function(Dist.uniform(vocab), horizon, fn)

    return ModelPair(build(seq_p), build(seq_q))
