"""Finite distributions and the residual calculus used by rejection-based decoding.

Everything downstream (samplers, exact recursions, enumeration oracles) goes
through the helpers here, so total variation and residuals are computed by one
definition each:

    tv(a, b)        = (1/2) * sum_x |a(x) - b(x)|
    [q - p]_+ (x)   = max(0, q(x) - p(x)) / tv(q, p)

For distributions the two normalizers agree: sum_x max(0, q - p) = tv(q, p).
"""

from __future__ import annotations

import numpy as np

NORMALIZE_TOL = 1e-9
ZERO_TV_TOL = 1e-12


class ZeroResidual(ValueError):
    """Raised when a residual [q - p]_+ is requested but tv(q, p) is zero."""


class Dist:
    """Immutable probability vector over a finite vocabulary {0, ..., V-1}.

    Entries must be nonnegative and sum to 1 within ``NORMALIZE_TOL``; the
    stored vector is renormalized exactly so config files may carry rounded
    decimals. Use :meth:`from_weights` to build one from unnormalized mass.
    """

    __slots__ = ("_probs",)

    def __init__(self, probs) -> None:
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("a distribution must be a nonempty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("distribution entries must be finite")
        if np.any(arr < 0.0):
            raise ValueError("distribution entries must be nonnegative")
        total = float(arr.sum())
        if abs(total - 1.0) > NORMALIZE_TOL:
            raise ValueError(f"distribution sums to {total!r}, outside tolerance {NORMALIZE_TOL}")
        arr = arr / total
        arr.flags.writeable = False
        self._probs = arr

    @classmethod
    def from_weights(cls, weights) -> "Dist":
        """Normalize nonnegative weights into a Dist. Zero total mass is an error."""
        arr = np.asarray(weights, dtype=np.float64)
        total = float(arr.sum())
        if total <= 0.0:
            raise ValueError("cannot normalize zero total mass")
        return cls(arr / total)

    @classmethod
    def uniform(cls, size: int) -> "Dist":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def point(cls, size: int, token: int) -> "Dist":
        arr = np.zeros(size)
        arr[token] = 1.0
        return cls(arr)

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self._probs > 0.0)

    def __len__(self) -> int:
        return self._probs.size

    def __getitem__(self, token: int) -> float:
        return float(self._probs[token])

    def __iter__(self):
        return iter(self._probs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        return self._probs.shape == other._probs.shape and bool(
            np.all(self._probs == other._probs)
        )

    def __hash__(self) -> int:
        return hash(self._probs.tobytes())

    def __repr__(self) -> str:
        return f"Dist({self._probs.tolist()!r})"


def _tv_arrays(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(a - b).sum())


def _as_array(d) -> np.ndarray:
    return d.probs if isinstance(d, Dist) else np.asarray(d, dtype=np.float64)


def tv_distance(a, b) -> float:
    """Total variation distance (1/2) sum_x |a(x) - b(x)|.

    Accepts Dist objects or raw vectors of equal length.
    """
    av, bv = _as_array(a), _as_array(b)
    if av.shape != bv.shape:
        raise ValueError(f"length mismatch: {av.shape} vs {bv.shape}")
    return _tv_arrays(av, bv)


def residual_plus(q, p) -> Dist:
    """Normalized positive residual [q - p]_+.

    Raises ZeroResidual when tv(q, p) < ZERO_TV_TOL, where the residual is
    undefined. Decoding only requests a residual after a rejection, an event
    of probability tv(q, p), so the guard is unreachable from the samplers.
    """
    qv, pv = _as_array(q), _as_array(p)
    if qv.shape != pv.shape:
        raise ValueError(f"length mismatch: {qv.shape} vs {pv.shape}")
    if _tv_arrays(qv, pv) < ZERO_TV_TOL:
        raise ZeroResidual("tv(q, p) is zero, residual undefined")
    return Dist.from_weights(np.maximum(qv - pv, 0.0))


def rejection_iterate(q_m, p) -> tuple[Dist, float]:
    """One step of the residual iteration q^{m+1} = [q^m - p]_+.

    Returns (q^{m+1}, r_m) with r_m = tv(q^m, p), the rejection probability of
    a draft from p verified against q^m. Raises ZeroResidual when r_m is zero.
    """
    qv, pv = _as_array(q_m), _as_array(p)
    if qv.shape != pv.shape:
        raise ValueError(f"length mismatch: {qv.shape} vs {pv.shape}")
    r = _tv_arrays(qv, pv)
    if r < ZERO_TV_TOL:
        raise ZeroResidual("tv(q^m, p) is zero, iterate undefined")
    return Dist.from_weights(np.maximum(qv - pv, 0.0)), r
