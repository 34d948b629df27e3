"""Single-token tradeoff between rejection probability and output bias.

Raising the acceptance rule b above min{1, q/p} cuts rejections below
tv(p, q) but makes exact unbiasedness impossible. For a fixed b the best
achievable bias is

    loss*(b) = (1/2) sum_x |q - b p| - (1/2) sum_x (1 - b) p

and a replacement distribution P attains it iff P vanishes where the
coefficient A = (q - b p) / sum((1 - b) p) is negative and P <= A elsewhere.
For the over-acceptance family b = min{1, (q + eps)/p} the achieved points
trace the exact line  P(reject) + loss*(b) = tv(p, q).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import Dist, _as_array, _tv_arrays

DEGENERATE_TOL = 1e-15
MEMBERSHIP_TOL = 1e-9


class DegenerateRejection(ValueError):
    """Raised when rejection has probability zero and no residual is ever sampled."""


@dataclass(frozen=True)
class ResidualCharacterization:
    """Solution set of the minimal-bias residual problem for one acceptance rule.

    ``coefficients`` is the vector A; a residual is optimal iff it is a
    distribution supported inside ``plus_set`` with P(x) <= A(x) pointwise.
    ``canonical`` is the member [A]_+, proportional to max{q - b p, 0}.
    """

    coefficients: np.ndarray
    plus_set: tuple[int, ...]
    minus_set: tuple[int, ...]
    canonical: Dist


@dataclass(frozen=True)
class ParetoPoint:
    """One over-acceptance setting: rejection probability vs minimal bias."""

    epsilon: float
    reject_prob: float
    loss_star: float


def _validate_acceptance(b, size: int) -> np.ndarray:
    arr = np.asarray(b, dtype=np.float64)
    if arr.shape != (size,):
        raise ValueError(f"acceptance vector has shape {arr.shape}, expected ({size},)")
    if not np.all(np.isfinite(arr)) or np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
        raise ValueError("acceptance probabilities must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def epsilon_acceptance(p, q, eps: float) -> np.ndarray:
    """Over-acceptance rule b(x) = min{1, (q(x) + eps) / p(x)}, b = 1 off p's support."""
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    pv, qv = _as_array(p), _as_array(q)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(pv > 0.0, (qv + eps) / pv, np.inf)
    return np.minimum(1.0, ratio)


def rejection_probability(b, p) -> float:
    """Probability sum_x (1 - b(x)) p(x) that a draft from p is rejected."""
    pv = _as_array(p)
    bv = _validate_acceptance(b, pv.size)
    return float(((1.0 - bv) * pv).sum())


def loss_tv_star(b, p, q) -> float:
    """Smallest total variation to q achievable by any residual under rule b.

    Zero exactly when b <= min{1, q/p} pointwise; equals tv(p, q) at b = 1.
    """
    pv, qv = _as_array(p), _as_array(q)
    bv = _validate_acceptance(b, pv.size)
    return 0.5 * float(np.abs(qv - bv * pv).sum()) - 0.5 * float(((1.0 - bv) * pv).sum())


def optimal_residual(b, p, q) -> ResidualCharacterization:
    """Characterize every bias-minimizing residual for acceptance rule b.

    Raises DegenerateRejection when sum (1 - b) p = 0: rejection never occurs
    and the residual is immaterial.
    """
    pv, qv = _as_array(p), _as_array(q)
    bv = _validate_acceptance(b, pv.size)
    denom = float(((1.0 - bv) * pv).sum())
    if denom <= DEGENERATE_TOL:
        raise DegenerateRejection("rejection probability is zero under this acceptance rule")
    coeff = (qv - bv * pv) / denom
    coeff.flags.writeable = False
    plus = tuple(int(x) for x in np.flatnonzero(coeff >= 0.0))
    minus = tuple(int(x) for x in np.flatnonzero(coeff < 0.0))
    return ResidualCharacterization(
        coefficients=coeff,
        plus_set=plus,
        minus_set=minus,
        canonical=Dist.from_weights(np.maximum(coeff, 0.0)),
    )


def is_optimal_residual(candidate, b, p, q, tol: float = MEMBERSHIP_TOL) -> bool:
    """Whether a distribution attains loss*(b), via the A-coefficient test."""
    char = optimal_residual(b, p, q)
    rv = _as_array(candidate)
    if rv.shape != char.coefficients.shape:
        raise ValueError("residual length does not match the vocabulary")
    if np.any(rv < -tol) or abs(float(rv.sum()) - 1.0) > max(tol, 1e-9):
        return False
    if any(rv[x] > tol for x in char.minus_set):
        return False
    return all(rv[x] <= char.coefficients[x] + tol for x in char.plus_set)


def induced_output_distribution(b, residual, p) -> Dist:
    """Single-token law of accept-or-replace decoding: b p + P * sum (1 - b) p."""
    pv = _as_array(p)
    bv = _validate_acceptance(b, pv.size)
    rv = _as_array(residual)
    if rv.shape != pv.shape:
        raise ValueError("residual length does not match the vocabulary")
    return Dist(bv * pv + rv * float(((1.0 - bv) * pv).sum()))


def pareto_front(p, q, eps_grid) -> list[ParetoPoint]:
    """Rejection/bias curve of the over-acceptance family along an eps grid.

    Each point satisfies reject_prob + loss_star = tv(p, q) exactly; eps = 0
    gives (tv, 0) and saturating eps gives (0, tv).
    """
    pv, qv = _as_array(p), _as_array(q)
    points = []
    for eps in eps_grid:
        b = epsilon_acceptance(pv, qv, float(eps))
        points.append(
            ParetoPoint(
                epsilon=float(eps),
                reject_prob=rejection_probability(b, pv),
                loss_star=loss_tv_star(b, pv, qv),
            )
        )
    return points


def tradeoff_identity_gap(point: ParetoPoint, p, q) -> float:
    """|reject_prob + loss_star - tv(p, q)| for one Pareto point (a guard value)."""
    return abs(point.reject_prob + point.loss_star - _tv_arrays(_as_array(p), _as_array(q)))
