"""Picard iteration in the weighted sup norm ``||f|| = sup |f(v) / v|``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import PatchTooLarge

TOL = 1e-13
MAX_ITER = 200
NOISE = 1e-11


def weighted_norm(f, v) -> float:
    f = np.asarray(f)
    if f.ndim > 1:
        return max(weighted_norm(row, v) for row in f)
    return float(np.max(np.abs(f[1:]) / v[1:]))


@dataclass
class PicardResult:
    value: np.ndarray
    iterations: int
    converged: bool
    contraction: float
    norm: float
    diffs: list = field(default_factory=list)
    reason: str = ""


def picard(mapping, x0, v, M, tol=TOL, max_iter=MAX_ITER) -> PicardResult:
    """Iterate ``x <- mapping(x)`` until the update falls below ``tol``.

    The contraction estimate is the largest ratio of successive update norms
    while both are above round-off level.  Iteration stops early when the
    iterate leaves the ball of radius ``M`` or the updates grow; ``mapping``
    may raise :class:`PatchTooLarge`, which propagates.
    """
    x = np.asarray(x0)
    diffs = []
    ratios = []
    for k in range(1, max_iter + 1):
        x_new = mapping(x)
        d = weighted_norm(x_new - x, v)
        nrm = weighted_norm(x_new, v)
        diffs.append(d)
        x = x_new
        if not np.all(np.isfinite(x)):
            return PicardResult(x, k, False, np.inf, np.inf, diffs, "non-finite iterate")
        if len(diffs) >= 2 and diffs[-2] > NOISE * max(1.0, nrm) and d > NOISE * max(1.0, nrm):
            ratios.append(d / diffs[-2])
        factor = max(ratios) if ratios else 0.0
        if nrm > M:
            return PicardResult(x, k, False, factor, nrm, diffs, "norm exceeds M")
        if d < tol:
            return PicardResult(x, k, True, factor, nrm, diffs)
        if len(ratios) >= 3 and all(r >= 1.0 for r in ratios[-3:]):
            return PicardResult(x, k, False, factor, nrm, diffs, "updates not shrinking")
    return PicardResult(x, max_iter, False, max(ratios) if ratios else 0.0,
                        weighted_norm(x, v), diffs, "iteration limit")


__all__ = ["PatchTooLarge", "PicardResult", "picard", "weighted_norm"]
