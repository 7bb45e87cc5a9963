"""Euclidean projection onto ``{0 <= p <= mask, sum(p) <= p_max}``.

The projection is ``clip(q - lam, 0, mask)`` with a scalar multiplier
``lam >= 0`` on the budget.  ``lam`` is found exactly: the map
``lam -> sum(clip(q - lam, 0, mask))`` is nonincreasing and piecewise linear
with kinks at ``q`` and ``q - mask``, so we locate the segment containing the
root and solve the linear equation on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import NetworkConfig

__all__ = [
    "ProjectionError",
    "ProjectionResult",
    "water_level",
    "bisect_water_level",
    "project_rows",
    "project_user",
    "project_profile",
]


class ProjectionError(ValueError):
    """The level search could not bracket a root (preconditions violated)."""


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    multiplier: float
    sum_binding: bool


def _clipped_sum(q, lam, mask):
    return np.clip(q - lam, 0.0, mask).sum(axis=-1)


def water_level(q: np.ndarray, mask: np.ndarray, total) -> np.ndarray:
    """Solve ``sum_k clip(q[r,k] - lam[r], 0, mask[r,k]) = total[r]`` for every row.

    ``lam`` may have either sign.  When the solution set is a flat segment the
    smallest ``lam`` is returned.  Requires finite positive masks and
    ``0 < total <= sum(mask)`` per row.
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    mask = np.broadcast_to(np.asarray(mask, dtype=float), q.shape)
    total = np.broadcast_to(np.asarray(total, dtype=float), q.shape[:1])
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(mask))):
        raise ProjectionError("water level needs finite inputs and masks")
    if np.any(mask <= 0):
        raise ProjectionError("masks must be positive")
    cap = mask.sum(axis=1)
    if np.any(total <= 0) or np.any(total > cap * (1 + 1e-12)):
        raise ProjectionError("target sum outside (0, sum(mask)]: no root to bracket")

    kinks = np.sort(np.concatenate([q - mask, q], axis=1), axis=1)  # (R, 2K)
    vals = np.clip(q[:, None, :] - kinks[:, :, None], 0.0, mask[:, None, :]).sum(axis=2)
    if np.any(np.diff(vals, axis=1) > 1e-9 * (1.0 + cap[:, None])):
        raise ProjectionError("clipped sum is not monotone in the level")  # cannot happen for valid input

    below = vals <= total[:, None]
    b = np.argmax(below, axis=1)
    rows = np.arange(q.shape[0])
    lam = np.empty(q.shape[0])
    at_first = b == 0
    # total == sum(mask): every channel saturated, smallest level is the first kink
    lam[at_first] = kinks[at_first, 0]
    r = rows[~at_first]
    if r.size:
        lo = kinks[r, b[r] - 1]
        hi = kinks[r, b[r]]
        mid = 0.5 * (lo + hi)[:, None]
        qr, mr = q[r], mask[r]
        upper = qr - mid >= mr
        free = (qr - mid > 0) & ~upper
        n_free = free.sum(axis=1)
        if np.any(n_free == 0):
            raise ProjectionError("degenerate segment in level search")
        lam[r] = ((qr * free).sum(axis=1) - (total[r] - (mr * upper).sum(axis=1))) / n_free
        lam[r] = np.clip(lam[r], lo, hi)
    return lam


def bisect_water_level(q, mask, total, iters: int = 200) -> float:
    """Bisection on the same monotone equation; a slow cross-check for :func:`water_level`."""
    q = np.asarray(q, dtype=float)
    mask = np.asarray(mask, dtype=float)
    lo, hi = float(np.min(q - mask)), float(np.max(q))
    if not (_clipped_sum(q, lo, mask) >= total >= _clipped_sum(q, hi, mask)):
        raise ProjectionError("cannot bracket the water level")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _clipped_sum(q, mid, mask) > total:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    return hi


# Rows whose clipped sum exceeds the budget by no more than this relative
# amount count as feasible.  The level solve itself can land a few ulps above
# the budget, and without the allowance re-projecting its output would move
# it again; with it the projection is exactly idempotent.
_BUDGET_RTOL = 1e-14


def project_rows(q: np.ndarray, mask: np.ndarray, p_max: np.ndarray):
    """Row-wise projection.  Returns ``(points, multipliers, binding)``."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    mask = np.broadcast_to(np.asarray(mask, dtype=float), q.shape)
    p_max = np.broadcast_to(np.asarray(p_max, dtype=float), q.shape[:1])
    if not np.all(np.isfinite(q)):
        raise ProjectionError("point to project must be finite")
    lam = np.zeros(q.shape[0])
    binding = np.clip(q, 0.0, mask).sum(axis=1) > p_max * (1.0 + _BUDGET_RTOL)
    if binding.any():
        lam[binding] = water_level(q[binding], mask[binding], p_max[binding])
        if np.any(lam[binding] < 0):
            raise ProjectionError("negative budget multiplier")
    points = np.clip(q - lam[:, None], 0.0, mask)
    return points, lam, binding


def project_user(q, mask, p_max: float) -> ProjectionResult:
    """Project one user's vector ``q`` onto its strategy set."""
    q = np.asarray(q, dtype=float)
    mask = np.asarray(mask, dtype=float)
    if q.ndim != 1 or mask.shape != q.shape:
        raise ProjectionError("q and mask must be vectors of equal length")
    pts, lam, binding = project_rows(q[None, :], mask[None, :], np.array([p_max], dtype=float))
    return ProjectionResult(point=pts[0], multiplier=float(lam[0]), sum_binding=bool(binding[0]))


def project_profile(q: np.ndarray, cfg: NetworkConfig) -> np.ndarray:
    """Project a full ``(N, K)`` profile onto the product strategy space."""
    q = np.asarray(q, dtype=float)
    if q.shape != cfg.shape:
        raise ProjectionError(f"profile shape {q.shape} != {cfg.shape}")
    try:
        points, _, _ = project_rows(q, cfg.effective_mask, cfg.p_max)
    except ProjectionError:
        for j in range(cfg.n_users):  # locate the failing user for the message
            try:
                project_user(q[j], cfg.effective_mask[j], cfg.p_max[j])
            except ProjectionError as exc:
                raise ProjectionError(f"user {j}: {exc}") from exc
        raise
    return points
