"""Deepest-line regression and series replication.

Short yearly series are densified by fitting the line of maximal regression
depth to each unit and simulating ``y = a + b t + sigma * eps`` on a uniform
grid, ``eps`` standard normal and ``sigma`` a robust residual scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stats_core import RandomStream, mad

__all__ = [
    "LinearFit",
    "regression_depth",
    "deepest_line",
    "sigma_hat",
    "replicate_series",
    "MAD_CONSISTENCY",
]

MAD_CONSISTENCY = 1.4826


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    rdepth: int
    sigma: float = 0.0

    def __call__(self, t):
        return self.intercept + self.slope * np.asarray(t, dtype=float)

    def residuals(self, t, y) -> np.ndarray:
        return np.asarray(y, dtype=float) - self(t)


def _points(t, y) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(t, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if t.size != y.size:
        raise ValueError("t and y differ in length")
    if t.size == 0:
        raise ValueError("empty input")
    return t, y


def _zero_tol(y: np.ndarray, fitted: np.ndarray) -> np.ndarray:
    # residuals within a few ulps of the data scale count as exact zeros
    scale = np.maximum(np.max(np.abs(y)), np.max(np.abs(fitted), axis=-1))
    return 1e-12 * np.maximum(scale, 1.0)


def _depths(t: np.ndarray, y: np.ndarray, slopes: np.ndarray, intercepts: np.ndarray) -> np.ndarray:
    order = np.argsort(t, kind="stable")
    t, y = t[order], y[order]
    fitted = intercepts[:, None] + slopes[:, None] * t
    resid = y - fitted
    tol = _zero_tol(y, fitted)[:, None]
    nonneg = (resid >= -tol).astype(np.int64)
    nonpos = (resid <= tol).astype(np.int64)
    zeros = np.zeros((len(slopes), 1), dtype=np.int64)
    left_pos = np.hstack((zeros, np.cumsum(nonneg, axis=1)))
    left_neg = np.hstack((zeros, np.cumsum(nonpos, axis=1)))
    # split after the last point of each block of equal t, and before everything
    cuts = np.concatenate(([0], np.flatnonzero(np.diff(t) > 0) + 1, [t.size]))
    lp, ln = left_pos[:, cuts], left_neg[:, cuts]
    rp, rn = left_pos[:, -1:] - lp, left_neg[:, -1:] - ln
    return np.minimum(lp + rn, ln + rp).min(axis=1)


def regression_depth(fit, t, y) -> int:
    """Regression depth of a line among the points ``(t_i, y_i)``.

    ``fit`` is a :class:`LinearFit` or a ``(slope, intercept)`` pair. Zero
    residuals count as both signs.
    """
    t, y = _points(t, y)
    slope, intercept = (fit.slope, fit.intercept) if isinstance(fit, LinearFit) else fit
    return int(_depths(t, y, np.array([float(slope)]), np.array([float(intercept)]))[0])


def sigma_hat(residuals, method: str = "mad") -> float:
    """Residual scale: normal-consistent MAD, or the classical SD with ``method="sd"``."""
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("empty input")
    if method == "mad":
        return MAD_CONSISTENCY * mad(r)
    if method == "sd":
        return float(np.std(r, ddof=1)) if r.size > 1 else 0.0
    raise ValueError(f"unknown scale method {method!r}")


def deepest_line(t, y, scale: str = "mad") -> LinearFit:
    """Line of maximal regression depth among all lines through two observations.

    Ties are broken by the smaller sum of absolute residuals, then by the
    smaller ``(slope, intercept)``. The returned fit carries the residual
    scale from :func:`sigma_hat`.
    """
    t, y = _points(t, y)
    if np.unique(t).size < 2:
        raise ValueError("need at least two distinct t values")
    i, j = np.triu_indices(t.size, k=1)
    keep = t[i] != t[j]
    i, j = i[keep], j[keep]
    slopes = (y[j] - y[i]) / (t[j] - t[i])
    intercepts = y[i] - slopes * t[i]
    depths = _depths(t, y, slopes, intercepts)
    l1 = np.abs(y - (intercepts[:, None] + slopes[:, None] * t)).sum(axis=1)
    # lexsort: last key is primary
    best = np.lexsort((intercepts, slopes, l1, -depths))[0]
    fit = LinearFit(float(slopes[best]), float(intercepts[best]), int(depths[best]))
    return LinearFit(fit.slope, fit.intercept, fit.rdepth, sigma_hat(fit.residuals(t, y), scale))


def replicate_series(fit: LinearFit, t0: float, t1: float, m: int,
                     stream: RandomStream) -> tuple[np.ndarray, np.ndarray]:
    """Simulate ``m`` equally spaced observations of the fitted trend on ``[t0, t1]``.

    Returns ``(grid, values)``. ``m`` normal variates are drawn from ``stream``
    even when ``sigma`` is zero, so stream consumption does not depend on the fit.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    grid = np.linspace(t0, t1, m)
    noise = stream.normal(m)
    return grid, fit(grid) + fit.sigma * noise
