"""Ready-made policies for the generic rejection decoder.

A policy pins down the two free choices of the framework, the acceptance
probability b_n(candidate | prefix) and the replacement distribution sampled
after a rejection. The factories here cover the cases studied analytically:
the speculative rule, its unique-unbiased relaxations with b below min{1,q/p},
and the over-acceptance family with either the bias-minimizing residual
("opt") or the target itself ("uno").
"""

from __future__ import annotations

import numpy as np

from .decoding import Policy
from .models import FullModel, MarkovModel, ModelPair
from .tradeoff import epsilon_acceptance, optimal_residual


def _iter_contexts(model):
    """Every distinct conditional context (n, representative history) once."""
    if isinstance(model, MarkovModel):
        for n in range(1, model.horizon + 1):
            for state in range(model.vocab_size):
                yield n, (state,)
    elif isinstance(model, FullModel):
        for n in range(1, model.horizon + 1):
            for history in model.histories(n):
                yield n, history
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")


def sd_policy(pair: ModelPair) -> Policy:
    """Speculative decoding as a generic policy: b = min{1, q/p}, P = [q - p]_+."""

    def acceptance(n: int, history: tuple[int, ...], candidate: int) -> float:
        p_val = float(pair.p.step(n, history)[candidate])
        if p_val <= 0.0:
            return 1.0
        return min(1.0, float(pair.q.step(n, history)[candidate]) / p_val)

    def residual(n: int, history: tuple[int, ...]) -> np.ndarray:
        weights = np.maximum(pair.q.step(n, history) - pair.p.step(n, history), 0.0)
        return weights / weights.sum()

    return Policy(acceptance, residual)


def over_acceptance_policy(pair: ModelPair, eps: float, residual_kind: str = "opt") -> Policy:
    """Biased decoding with b = min{1, (q + eps)/p} at every position.

    residual_kind "opt" replaces rejected tokens from the bias-minimizing
    canonical residual, "uno" from the target conditional itself.
    """
    if residual_kind not in ("opt", "uno"):
        raise ValueError("residual_kind must be 'opt' or 'uno'")

    def acceptance(n: int, history: tuple[int, ...], candidate: int) -> float:
        b = epsilon_acceptance(pair.p.step(n, history), pair.q.step(n, history), eps)
        return float(b[candidate])

    def residual(n: int, history: tuple[int, ...]) -> np.ndarray:
        p_row = pair.p.step(n, history)
        q_row = pair.q.step(n, history)
        if residual_kind == "uno":
            return q_row
        b = epsilon_acceptance(p_row, q_row, eps)
        return optimal_residual(b, p_row, q_row).canonical.probs

    return Policy(acceptance, residual)


def always_accept_policy(pair: ModelPair) -> Policy:
    """b = 1 everywhere: the decoder keeps every draft, emitting p's law exactly."""
    return Policy(
        lambda n, history, candidate: 1.0,
        lambda n, history: pair.q.step(n, history),
    )


def random_unbiased_policy(pair: ModelPair, rng: np.random.Generator) -> Policy:
    """Random unbiased member of the framework, below the speculative rule.

    Each context draws b(x) = u(x) * min{1, q(x)/p(x)} with u uniform on
    [0, 1], then takes the unique residual that restores the target law,
    (q - b p) / sum((1 - b) p). Such policies can only reject more often than
    speculative decoding.
    """
    tables: dict = {}
    for n, history in _iter_contexts(pair.q):
        p_row = pair.p.step(n, history)
        q_row = pair.q.step(n, history)
        with np.errstate(divide="ignore", invalid="ignore"):
            cap = np.minimum(1.0, np.where(p_row > 0.0, q_row / p_row, np.inf))
        b_row = rng.uniform(size=pair.vocab_size) * cap
        denom = float(((1.0 - b_row) * p_row).sum())
        if denom > 1e-15:
            residual_row = (q_row - b_row * p_row) / denom
        else:
            residual_row = q_row  # rejection unreachable, any distribution serves
        tables[pair.q.context_key(n, history)] = (b_row, residual_row)

    def acceptance(n: int, history: tuple[int, ...], candidate: int) -> float:
        return float(tables[pair.q.context_key(n, history)][0][candidate])

    def residual(n: int, history: tuple[int, ...]) -> np.ndarray:
        return tables[pair.q.context_key(n, history)][1]

    return Policy(acceptance, residual)
