"""Exact decision-tree oracles for the decoding algorithms.

Every probabilistic branch an algorithm can take (draft token, accept or
reject, replacement token) is expanded with its exact probability, no
sampling. Draft tokens are branched lazily at the position where they are
examined; with lookahead to the horizon this is equivalent to drafting the
whole round eagerly, because unexamined drafts are discarded and the
conditioning histories coincide.

These walkers are the ground truth the closed-form recursions are tested
against, so they share nothing with exact.py beyond the distribution helpers.
"""

from __future__ import annotations

import math

import numpy as np

from .decoding import Policy, policy_acceptance, policy_residual_row
from .dist import _tv_arrays
from .models import FULL_TABLE_CAP, ModelPair

ALGORITHMS = ("sd", "batch", "generic")


def _check_size(pair: ModelPair) -> None:
    if pair.vocab_size**pair.horizon > FULL_TABLE_CAP:
        raise ValueError(
            f"V**T = {pair.vocab_size**pair.horizon} exceeds the enumeration cap {FULL_TABLE_CAP}"
        )


class _Accumulator:
    """Collects leaf masses; compensated sums keep 1e-12 comparisons honest."""

    def __init__(self, vocab_size: int, horizon: int) -> None:
        self.vocab_size = vocab_size
        self.law = np.zeros(vocab_size**horizon)
        self.rejection_terms: list[float] = []

    def leaf(self, history: tuple[int, ...], mass: float, rejections: int) -> None:
        index = 0
        for token in history[1:]:
            index = index * self.vocab_size + token
        self.law[index] += mass
        if rejections:
            self.rejection_terms.append(mass * rejections)

    def expected_rejections(self) -> float:
        return math.fsum(self.rejection_terms)


def _walk_per_position(pair: ModelPair, accept_reject_fn, acc: _Accumulator) -> None:
    """Expand algorithms whose branching at position n depends only on the prefix.

    accept_reject_fn(n, history) -> (accept_weights, reject_weight, replacement)
    where accept_weights[x] is the joint probability of drafting x and keeping
    it, and replacement is the distribution of the token emitted after a
    rejection (probability reject_weight).
    """
    v, horizon = pair.vocab_size, pair.horizon

    def expand(history: tuple[int, ...], n: int, mass: float, rejections: int) -> None:
        if mass == 0.0:
            return
        if n > horizon:
            acc.leaf(history, mass, rejections)
            return
        accept_w, reject_w, replacement = accept_reject_fn(n, history)
        for token in range(v):
            expand(history + (token,), n + 1, mass * float(accept_w[token]), rejections)
        if reject_w > 0.0:
            for token in range(v):
                expand(
                    history + (token,),
                    n + 1,
                    mass * reject_w * float(replacement[token]),
                    rejections + 1,
                )

    for x0 in range(v):
        expand((x0,), 1, pair.prompt[x0], 0)


def _sd_branches(pair: ModelPair):
    def fn(n: int, history: tuple[int, ...]):
        p_row = pair.p.step(n, history)
        q_row = pair.q.step(n, history)
        accept_w = np.minimum(p_row, q_row)
        reject_w = _tv_arrays(p_row, q_row)
        if reject_w <= 0.0:
            return accept_w, 0.0, None
        weights = np.maximum(q_row - p_row, 0.0)
        return accept_w, reject_w, weights / weights.sum()

    return fn


def _generic_branches(pair: ModelPair, policy: Policy):
    v = pair.vocab_size

    def fn(n: int, history: tuple[int, ...]):
        p_row = pair.p.step(n, history)
        b_row = np.array(
            [policy_acceptance(policy, n, history, token) for token in range(v)]
        )
        accept_w = p_row * b_row
        reject_w = float((p_row * (1.0 - b_row)).sum())
        if reject_w <= 0.0:
            return accept_w, 0.0, None
        return accept_w, reject_w, policy_residual_row(policy, n, history, v)

    return fn


def _walk_batch(pair: ModelPair, batch_size: int, acc: _Accumulator) -> None:
    v, horizon = pair.vocab_size, pair.horizon

    def new_round(history: tuple[int, ...], n: int, mass: float, rejections: int) -> None:
        if mass == 0.0:
            return
        if n > horizon:
            acc.leaf(history, mass, rejections)
            return
        root(history, n, mass, rejections, pair.q.step(n, history), 1)

    def root(history, n, mass, rejections, q_iter, m) -> None:
        """Response m's first token at round root n, tested against iterate q^m."""
        if m > batch_size:
            # All M first tokens rejected: emit from q^{M+1}, charge one call.
            for token in range(v):
                new_round(
                    history + (token,), n + 1, mass * float(q_iter[token]), rejections + 1
                )
            return
        p_row = pair.p.step(n, history)
        accept_w = np.minimum(p_row, q_iter)
        for token in range(v):
            within(history + (token,), n + 1, mass * float(accept_w[token]), rejections)
        r_m = _tv_arrays(q_iter, p_row)
        if r_m > 0.0:
            weights = np.maximum(q_iter - p_row, 0.0)
            root(history, n, mass * r_m, rejections, weights / weights.sum(), m + 1)

    def within(history, n, mass, rejections) -> None:
        """Positions after the round's first acceptance, verified against q itself."""
        if mass == 0.0:
            return
        if n > horizon:
            acc.leaf(history, mass, rejections)
            return
        p_row = pair.p.step(n, history)
        q_row = pair.q.step(n, history)
        accept_w = np.minimum(p_row, q_row)
        for token in range(v):
            within(history + (token,), n + 1, mass * float(accept_w[token]), rejections)
        reject_w = _tv_arrays(p_row, q_row)
        if reject_w > 0.0:
            weights = np.maximum(q_row - p_row, 0.0)
            replacement = weights / weights.sum()
            for token in range(v):
                new_round(
                    history + (token,),
                    n + 1,
                    mass * reject_w * float(replacement[token]),
                    rejections + 1,
                )

    for x0 in range(v):
        new_round((x0,), 1, pair.prompt[x0], 0)


def _enumerate(
    pair: ModelPair, algorithm: str, batch_size: int, policy: Policy | None
) -> _Accumulator:
    _check_size(pair)
    acc = _Accumulator(pair.vocab_size, pair.horizon)
    if algorithm == "sd":
        _walk_per_position(pair, _sd_branches(pair), acc)
    elif algorithm == "generic":
        if policy is None:
            raise ValueError("algorithm 'generic' requires a policy")
        _walk_per_position(pair, _generic_branches(pair, policy), acc)
    elif algorithm == "batch":
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        _walk_batch(pair, batch_size, acc)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    return acc


def enumerate_output_distribution(
    pair: ModelPair, algorithm: str = "sd", *, batch_size: int = 1, policy: Policy | None = None
) -> np.ndarray:
    """Exact output law of a decoding algorithm over all V**T trajectories.

    Returned flat array uses the joint_distribution indexing (x_1 most
    significant digit). Requires V**T <= FULL_TABLE_CAP.
    """
    return _enumerate(pair, algorithm, batch_size, policy).law


def enumerate_expected_rejections(
    pair: ModelPair, algorithm: str = "sd", *, batch_size: int = 1, policy: Policy | None = None
) -> float:
    """Exact E[rejections] of a decoding algorithm by full branch expansion."""
    return _enumerate(pair, algorithm, batch_size, policy).expected_rejections()
