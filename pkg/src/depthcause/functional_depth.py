"""Functional depths over curves sampled on a common grid.

All three depths here are built from pointwise order relations only: at each
grid point a curve is compared with the sample values by counting how many
lie strictly below and strictly above it. That makes every depth invariant
under a common strictly increasing map of the values.

* Modified band depth (MBD), bands formed by pairs of sample curves.
* Fraiman-Muniz depth (FM) with univariate depth ``1 - |1/2 - F_t(x(t))|``.
* Extremal depth (ED), which orders curves by the left tail of the
  distribution of their pointwise depths.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .data_model import DepthMethod, DepthVector, FunctionalSample, UnitId
from .errors import DataError, SparseGridWarning

__all__ = [
    "PointwiseDepthCurve",
    "DepthCdf",
    "MedianDifference",
    "order_counts",
    "mbd",
    "fm_depth",
    "pointwise_extremal_depth",
    "depth_cdf",
    "extremal_depth",
    "functional_depth",
    "functional_median",
    "median_difference",
    "causal_strength",
]

# ED is unreliable unless the grid is clearly longer than the sample
SPARSE_GRID_FACTOR = 2
# pairwise comparison beats sorting for small samples
BROADCAST_MAX_N = 48


@dataclass(frozen=True)
class PointwiseDepthCurve:
    grid: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class DepthCdf:
    """Cumulative share of grid points whose pointwise depth is ``<= level``."""

    levels: np.ndarray
    masses: np.ndarray

    def __call__(self, r: float) -> float:
        idx = np.searchsorted(self.levels, r, side="right")
        return 0.0 if idx == 0 else float(self.masses[idx - 1])


@dataclass(frozen=True)
class MedianDifference:
    grid: np.ndarray
    diff: np.ndarray
    sup_norm: float
    l2_norm: float


def _curves(sample) -> np.ndarray:
    if isinstance(sample, FunctionalSample):
        return sample.curves
    arr = np.atleast_2d(np.asarray(sample, dtype=float))
    if arr.size == 0:
        raise DataError("empty sample")
    return arr


def _units(sample) -> tuple[UnitId, ...]:
    return sample.units if isinstance(sample, FunctionalSample) else ()


def order_counts(curves: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per curve and grid point, counts of sample values strictly below and above.

    ``curves`` may carry leading batch dimensions: shape ``(..., n, m)``.
    """
    n = curves.shape[-2]
    cols = np.swapaxes(curves, -1, -2)
    order = np.argsort(cols, axis=-1)
    ordered = np.take_along_axis(cols, order, axis=-1)
    if not np.any(ordered[..., 1:] == ordered[..., :-1]):
        # no ties: the position in sorted order is the count below
        below = np.empty(order.shape, dtype=np.int64)
        np.put_along_axis(below, order, np.broadcast_to(np.arange(n), order.shape), axis=-1)
        below = np.swapaxes(below, -1, -2)
        return below, n - 1 - below
    if n <= BROADCAST_MAX_N:
        x = curves[..., None, :, :]
        ref = curves[..., :, None, :]
        below = np.count_nonzero(x < ref, axis=-2)
        above = np.count_nonzero(x > ref, axis=-2)
        return below, above
    below = rankdata(curves, method="min", axis=-2).astype(np.int64) - 1
    above = n - rankdata(curves, method="max", axis=-2).astype(np.int64)
    return below, above


def _mbd_values(curves: np.ndarray) -> np.ndarray:
    n = curves.shape[-2]
    below, above = order_counts(curves)
    pairs = n * (n - 1) // 2
    # bands that miss x(t) have both ends strictly below or both strictly above
    inside = pairs - below * (below - 1) // 2 - above * (above - 1) // 2
    return inside.mean(axis=-1) / pairs


def mbd(sample) -> DepthVector:
    """Modified band depth with ``J = 2``.

    For each pair of sample curves (the candidate itself included) the share
    of grid points at which the candidate lies inside the pair's band is
    averaged over all ``n(n-1)/2`` pairs.
    """
    curves = _curves(sample)
    if curves.shape[0] < 2:
        raise DataError("modified band depth needs at least two curves")
    return DepthVector(_mbd_values(curves), DepthMethod.MBD, _units(sample))


def _fm_values(curves: np.ndarray) -> np.ndarray:
    n = curves.shape[-2]
    _, above = order_counts(curves)
    cdf = (n - above) / n
    return (1.0 - np.abs(0.5 - cdf)).mean(axis=-1)


def fm_depth(sample) -> DepthVector:
    """Fraiman-Muniz depth: grid average of ``1 - |1/2 - F_t(x(t))|``."""
    return DepthVector(_fm_values(_curves(sample)), DepthMethod.FM, _units(sample))


def _pointwise_ed_counts(curves: np.ndarray) -> np.ndarray:
    # n * D_g(t), an integer in 1..n
    n = curves.shape[-2]
    below, above = order_counts(curves)
    return n - np.abs(below - above)


def pointwise_extremal_depth(sample) -> list[PointwiseDepthCurve]:
    """``D_g(t) = 1 - |#{x_i(t) < g(t)} - #{x_i(t) > g(t)}| / n`` for every curve."""
    curves = _curves(sample)
    n, m = curves.shape
    grid = sample.grid if isinstance(sample, FunctionalSample) else np.arange(m, dtype=float)
    counts = _pointwise_ed_counts(curves)
    return [PointwiseDepthCurve(grid, row / n) for row in counts]


def depth_cdf(pointwise: PointwiseDepthCurve) -> DepthCdf:
    levels, counts = np.unique(pointwise.values, return_counts=True)
    return DepthCdf(levels, np.cumsum(counts) / pointwise.values.size)


def _ed_values(curves: np.ndarray) -> np.ndarray:
    n, m = curves.shape
    counts = _pointwise_ed_counts(curves)
    # cumulative histogram over integer levels 1..n; a lexicographically
    # smaller row means less mass in the left tail, i.e. a deeper curve
    hist = np.zeros((n, n + 1), dtype=np.int64)
    np.add.at(hist, (np.repeat(np.arange(n), m), counts.ravel()), 1)
    cum = np.cumsum(hist[:, 1:], axis=1)
    _, inverse, multiplicity = np.unique(cum, axis=0, return_inverse=True, return_counts=True)
    strictly_deeper = np.concatenate(([0], np.cumsum(multiplicity)[:-1]))
    return (n - strictly_deeper[inverse.ravel()]) / n


def extremal_depth(sample, warn: bool = True) -> DepthVector:
    """Extremal depth.

    ``ED(g)`` is the share of sample curves that ``g`` weakly dominates in the
    left-tail lexicographic order of depth distributions. Curves with
    identical depth distributions dominate each other, so the deepest curve
    always gets depth 1.

    A :class:`SparseGridWarning` is issued when the grid has fewer than
    ``2 * n`` points, where the pointwise depth distributions are too coarse
    to separate curves.
    """
    curves = _curves(sample)
    n, m = curves.shape
    if warn and n > 1 and m < SPARSE_GRID_FACTOR * n:
        warnings.warn(
            f"extremal depth on a sparse grid (m={m}, n={n}); consider replicating the series",
            SparseGridWarning,
            stacklevel=2,
        )
    return DepthVector(_ed_values(curves), DepthMethod.ED, _units(sample))


def functional_depth(sample, method, warn: bool = True) -> DepthVector:
    method = DepthMethod.parse(method)
    if method is DepthMethod.MBD:
        return mbd(sample)
    if method is DepthMethod.FM:
        return fm_depth(sample)
    if method is DepthMethod.ED:
        return extremal_depth(sample, warn=warn)
    raise ValueError(f"{method.value} is not a functional depth")


def functional_median(sample: FunctionalSample, method) -> tuple[UnitId, np.ndarray]:
    """Deepest sample curve; ties go to the smallest unit index."""
    if sample.n == 1:
        return sample.units[0], sample.curves[0].copy()
    depths = functional_depth(sample, method, warn=False).values
    best = int(np.flatnonzero(depths == depths.max())[0])
    return sample.units[best], sample.curves[best].copy()


def _trapezoid(y: np.ndarray, x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(np.sum((y[1:] + y[:-1]) * np.diff(x)) / 2.0)


def median_difference(sample_f: FunctionalSample, sample_c: FunctionalSample, method) -> MedianDifference:
    """Pointwise difference between the functional medians of two samples."""
    if sample_f.grid.shape != sample_c.grid.shape or not np.array_equal(sample_f.grid, sample_c.grid):
        raise DataError("grid mismatch")
    _, med_f = functional_median(sample_f, method)
    _, med_c = functional_median(sample_c, method)
    diff = med_f - med_c
    return MedianDifference(
        grid=sample_f.grid.copy(),
        diff=diff,
        sup_norm=float(np.max(np.abs(diff))),
        l2_norm=float(np.sqrt(_trapezoid(diff**2, sample_f.grid))),
    )


def causal_strength(md: MedianDifference, tau: float = 0.0) -> float:
    """Share of the time domain where ``|diff(t)| > tau``.

    The indicator is integrated with the trapezoidal rule and divided by the
    length of the domain. A one-point grid returns the indicator itself.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    exceed = (np.abs(md.diff) > tau).astype(float)
    if md.grid.size < 2:
        return float(exceed[0])
    return _trapezoid(exceed, md.grid) / float(md.grid[-1] - md.grid[0])
