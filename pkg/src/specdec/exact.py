"""Closed-form expected-rejection analysis for speculative and batch decoding.

Speculative decoding rejects at position n with probability
tv(p_n(.|prefix), q_n(.|prefix)), so its expected rejection count is the sum of
per-position total variations under the target's prefix law. Batch decoding
improves on that by an amount driven by the residual iterates
q^{m+1} = [q^m - p]_+ at round roots: a root only charges a rejection after all
M draft responses fail, an event of probability prod_m tv(q^m, p).

Two implementations of the batch formula are kept deliberately separate:
a history-level recursion over explicit prefixes (any model) and an O(T V^2)
state-marginalized recursion (Markov chains). Tests require them to agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dist import ZERO_TV_TOL, _tv_arrays
from .models import MarkovModel, ModelPair, target_marginals


@dataclass(frozen=True)
class BatchRejections:
    """Expected rejections of batch decoding and its improvement over speculative."""

    total: float
    improvement: float


def _is_markov_pair(pair: ModelPair) -> bool:
    return isinstance(pair.p, MarkovModel) and isinstance(pair.q, MarkovModel)


def expected_rejections_sd(pair: ModelPair) -> float:
    """Exact E[rejections] of speculative decoding: sum_n E_q[tv(p_n, q_n)]."""
    if _is_markov_pair(pair):
        terms = []
        mu = pair.q.prompt.probs
        for n in range(1, pair.horizon + 1):
            p_rows = pair.p.steps[n - 1].rows
            q_rows = pair.q.steps[n - 1].rows
            for s in range(pair.vocab_size):
                if mu[s] > 0.0:
                    terms.append(mu[s] * _tv_arrays(p_rows[s], q_rows[s]))
            mu = mu @ q_rows
        return math.fsum(terms)

    terms = []

    def expand(history: tuple[int, ...], n: int, mass: float) -> None:
        if mass == 0.0 or n > pair.horizon:
            return
        p_row = pair.p.step(n, history)
        q_row = pair.q.step(n, history)
        terms.append(mass * _tv_arrays(p_row, q_row))
        for token in range(pair.vocab_size):
            expand(history + (token,), n + 1, mass * float(q_row[token]))

    for x0 in range(pair.vocab_size):
        expand((x0,), 1, pair.prompt[x0])
    return math.fsum(terms)


def acceleration_rate(expected_rejections: float, horizon: int) -> float:
    """Tokens decoded per target evaluation, T / E[rejections].

    A rejection-free decoder produces the whole horizon in the single pass,
    so the rate is reported as T when the expectation is zero.
    """
    if expected_rejections < 0.0:
        raise ValueError("expected_rejections must be nonnegative")
    if expected_rejections == 0.0:
        return float(horizon)
    return horizon / expected_rejections


def _root_iterates(q_row: np.ndarray, p_row: np.ndarray, batch_size: int):
    """(prod_{m<=M} r_m, q^{M+1}) for the residual iteration at one round root.

    The product short-circuits to zero at the first r_m below ZERO_TV_TOL:
    once an iterate matches p, that root can no longer reject.
    """
    cur = q_row
    prod = 1.0
    for _ in range(batch_size):
        r = _tv_arrays(cur, p_row)
        if r < ZERO_TV_TOL:
            return 0.0, None
        prod *= r
        weights = np.maximum(cur - p_row, 0.0)
        cur = weights / weights.sum()
    return prod, cur


def _limit_product(q_row: np.ndarray, p_row: np.ndarray):
    """lim_{M->inf} prod_m tv(q^m, p) and the limiting iterate.

    The support of q^m can only shrink. While the support is stable the map
    q -> (q - p)/r is affine with constant r = 1 - p(S) and expands deviations
    from its fixed point p|_S / p(S) by 1/r per step, so the iteration either
    sits at the fixed point (product decays geometrically to zero), escapes to
    a smaller support after a computable number of steps, or reaches a support
    where p has no mass at all, freezing r at 1 and the product at its current
    value. Only that last case yields a nonzero limit.
    """
    cur = np.array(q_row, dtype=np.float64)
    prod = 1.0
    while True:
        supp = cur > 0.0
        overlap = float(p_row[supp].sum())
        if overlap == 0.0:
            return prod, cur
        r = _tv_arrays(cur, p_row)
        if r < ZERO_TV_TOL or prod < 1e-300:
            return 0.0, None
        weights = np.maximum(cur - p_row, 0.0)
        if not np.array_equal(weights > 0.0, supp):
            prod *= r
            cur = weights / weights.sum()
            continue
        qstar = np.where(supp, p_row / overlap, 0.0)
        diff = cur - qstar
        growth = 1.0 / r
        crossing = None
        for x in np.flatnonzero(supp):
            gap = float(qstar[x] - p_row[x])
            d = float(diff[x])
            if d >= 0.0 or gap <= 0.0:
                continue
            k = max(1, math.ceil(math.log(gap / -d) / math.log(growth)))
            crossing = k if crossing is None else min(crossing, k)
        if crossing is None:
            # No coordinate ever drops to p: constant r < 1 forever.
            return 0.0, None
        prod *= r**crossing
        cur = qstar + diff * growth**crossing


def _batch_terms_markov(pair: ModelPair, root_fn):
    """Shared marginalized recursion: root_fn(q_row, p_row) -> (prod, iterate)."""
    v = pair.vocab_size
    mu = pair.q.prompt.probs.copy()
    g = pair.q.prompt.probs.copy()
    sd_terms: list[float] = []
    gain_terms: list[float] = []
    for n in range(1, pair.horizon + 1):
        p_rows = pair.p.steps[n - 1].rows
        q_rows = pair.q.steps[n - 1].rows
        g_next = np.zeros(v)
        for s in range(v):
            p_row, q_row = p_rows[s], q_rows[s]
            tv = _tv_arrays(q_row, p_row)
            prod, tail = root_fn(q_row, p_row)
            sd_terms.append(mu[s] * tv)
            gain_terms.append(g[s] * (tv - prod))
            residual_mass = np.maximum(q_row - p_row, 0.0)
            g_next += residual_mass * (mu[s] - g[s])
            if prod > 0.0:
                g_next += prod * g[s] * tail
        mu = mu @ q_rows
        g = g_next
    return math.fsum(sd_terms), math.fsum(gain_terms)


def _batch_terms_general(pair: ModelPair, root_fn):
    """Shared history-level recursion over explicit prefixes (any model kind)."""
    v = pair.vocab_size
    q_mass = {(x0,): pair.prompt[x0] for x0 in range(v)}
    f_mass = dict(q_mass)
    sd_terms: list[float] = []
    gain_terms: list[float] = []
    for n in range(1, pair.horizon + 1):
        q_next: dict[tuple[int, ...], float] = {}
        f_next: dict[tuple[int, ...], float] = {}
        for history, qh in q_mass.items():
            fh = f_mass[history]
            p_row = pair.p.step(n, history)
            q_row = pair.q.step(n, history)
            tv = _tv_arrays(q_row, p_row)
            prod, tail = root_fn(q_row, p_row)
            sd_terms.append(qh * tv)
            gain_terms.append(fh * (tv - prod))
            residual_mass = np.maximum(q_row - p_row, 0.0)
            f_row = residual_mass * (qh - fh)
            if prod > 0.0:
                f_row = f_row + prod * fh * tail
            for token in range(v):
                key = history + (token,)
                q_next[key] = qh * float(q_row[token])
                f_next[key] = float(f_row[token])
        q_mass, f_mass = q_next, f_next
    return math.fsum(sd_terms), math.fsum(gain_terms)


def expected_rejections_batch(pair: ModelPair, batch_size: int) -> BatchRejections:
    """Exact E[rejections] of batch decoding with M = batch_size responses.

    Returns the total and its improvement over speculative decoding; the total
    is sum_n E_q[tv] minus the improvement, and batch_size = 1 recovers
    speculative decoding with improvement exactly zero.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    root_fn = lambda q_row, p_row: _root_iterates(q_row, p_row, batch_size)
    if _is_markov_pair(pair):
        sd, gain = _batch_terms_markov(pair, root_fn)
    else:
        sd, gain = _batch_terms_general(pair, root_fn)
    return BatchRejections(total=sd - gain, improvement=gain)


def limit_rejections(pair: ModelPair) -> float:
    """Infimum of expected batch rejections as the batch size grows without bound."""
    if _is_markov_pair(pair):
        sd, gain = _batch_terms_markov(pair, _limit_product)
    else:
        sd, gain = _batch_terms_general(pair, _limit_product)
    return sd - gain


def batch_improvement_uniform(ratio: float, batch_size: int) -> float:
    """Batch improvement for p = Unif(V), q = Unif(V'), one step, ratio = V / V'.

    Every residual iterate is Unif(V') again, so each root response rejects
    with probability 1 - 1/ratio and the improvement telescopes to
    (1 - 1/ratio) - (1 - 1/ratio)**M.
    """
    if ratio < 1.0:
        raise ValueError("ratio must be >= 1 (the draft support contains the target's)")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    base = 1.0 - 1.0 / ratio
    return base - base**batch_size


def batch_improvement_bernoulli(u: float, v: float, batch_size: int) -> float:
    """Batch improvement for p = Ber(u), q = Ber(v) with u >= v, one step.

    The first iterate collapses onto the token where q exceeds p, after which
    every response rejects with probability u, giving |u - v| * (1 - u**(M-1)).
    """
    if not 0.0 <= v <= u <= 1.0:
        raise ValueError("requires 0 <= v <= u <= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    return abs(u - v) * (1.0 - u ** (batch_size - 1))


def sd_marginal_terms(pair: ModelPair) -> list[float]:
    """Per-position speculative rejection probabilities E_q[tv(p_n, q_n)] (Markov)."""
    if not _is_markov_pair(pair):
        raise TypeError("sd_marginal_terms requires a Markov pair")
    mu_list = [pair.q.prompt] + target_marginals(pair.q)
    out = []
    for n in range(1, pair.horizon + 1):
        mu = mu_list[n - 1].probs
        p_rows = pair.p.steps[n - 1].rows
        q_rows = pair.q.steps[n - 1].rows
        out.append(
            math.fsum(
                mu[s] * _tv_arrays(p_rows[s], q_rows[s])
                for s in range(pair.vocab_size)
                if mu[s] > 0.0
            )
        )
    return out
