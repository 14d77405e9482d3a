"""Projection depth of outcome vectors and the ranks it induces.

``PD(x) = 1 / (1 + O(x))`` with outlyingness

    O(x) = sup_u |u'x - med(u'X)| / mad(u'X)

over unit directions ``u``. The supremum is exact in one and two dimensions
and a Monte Carlo lower bound otherwise.

Exact 2-d supremum
------------------
Fix an arc of directions on which (a) the order of the projected sample is
constant, so the median is a fixed point or midpoint ``c``, and (b) the order
and signs of ``|u'(x_i - c)|`` are constant, so the MAD is a fixed linear
form in ``u``. On such an arc the outlyingness is ``|a'u| / (b'u)``, and the
ratio of two linear forms in ``(cos t, sin t)`` is monotone in ``t``. The
supremum is therefore reached at arc endpoints, which are directions
orthogonal to ``x_i - x_j`` (order changes) or to ``x_i + x_j - 2c`` (MAD
changes, ``i == j`` giving sign changes). Evaluating every such direction,
plus a circular grid as a safety net, gives the exact value.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data_model import MultivariateSample
from .errors import DataError
from .stats_core import RandomStream, mid_ranks

__all__ = [
    "DirectionKind",
    "DirectionSet",
    "default_directions",
    "critical_directions_2d",
    "outlyingness",
    "projection_depth",
    "projection_depths",
    "depth_ranks",
]

CIRCULAR_GRID_SIZE = 1024
DEFAULT_MC_DIRECTIONS = 10_000
DEPTH_TIE_RTOL = 1e-9


class DirectionKind(str, Enum):
    EXACT_1D = "exact_1d"
    EXACT_2D_CIRCULAR = "exact_2d_circular"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Unit directions over which outlyingness is maximised.

    For ``EXACT_2D_CIRCULAR`` the stored rows are the circular safety grid;
    the sample-dependent critical directions are added at evaluation time.
    """

    directions: np.ndarray
    kind: DirectionKind
    seed: int | None = None

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("directions must have unit norm")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "kind", DirectionKind(self.kind))

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    @property
    def exact(self) -> bool:
        return self.kind is not DirectionKind.MONTE_CARLO

    @classmethod
    def exact_1d(cls) -> "DirectionSet":
        return cls(np.ones((1, 1)), DirectionKind.EXACT_1D)

    @classmethod
    def exact_2d(cls, grid_size: int = CIRCULAR_GRID_SIZE) -> "DirectionSet":
        # O(u) = O(-u), so half a circle suffices
        theta = np.arange(grid_size) * (np.pi / grid_size)
        return cls(_unit_circle(theta), DirectionKind.EXACT_2D_CIRCULAR)

    @classmethod
    def monte_carlo(cls, dim: int, k: int = DEFAULT_MC_DIRECTIONS, seed: int = 0) -> "DirectionSet":
        """``k`` directions uniform on the sphere.

        The first ``k1`` rows for a given seed do not depend on ``k``, so a
        larger set always extends a smaller one.
        """
        if k < 1:
            raise ValueError("need at least one direction")
        z = RandomStream(seed, (3,)).normal((k, dim))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
        return cls(z / norms, DirectionKind.MONTE_CARLO, seed)


def default_directions(dim: int, k: int = DEFAULT_MC_DIRECTIONS, seed: int = 0) -> DirectionSet:
    if dim == 1:
        return DirectionSet.exact_1d()
    if dim == 2:
        return DirectionSet.exact_2d()
    return DirectionSet.monte_carlo(dim, k, seed)


def _unit_circle(theta: np.ndarray) -> np.ndarray:
    return np.column_stack((np.cos(theta), np.sin(theta)))


def _normal_angles(vectors: np.ndarray) -> np.ndarray:
    """Angles in [0, pi) of directions orthogonal to each nonzero vector."""
    scale = np.max(np.abs(vectors)) if vectors.size else 0.0
    keep = np.linalg.norm(vectors, axis=1) > 1e-14 * max(scale, 1.0)
    v = vectors[keep]
    return np.mod(np.arctan2(v[:, 0], -v[:, 1]), np.pi)


def critical_directions_2d(points: np.ndarray) -> np.ndarray:
    """All breakpoint directions of the 2-d outlyingness function of ``points``."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    order_angles = np.unique(_normal_angles(pts[ju] - pts[iu]))
    if order_angles.size == 0:
        return _unit_circle(np.array([0.0]))

    # one probe direction inside every arc between consecutive order changes
    nxt = np.append(order_angles[1:], order_angles[0] + np.pi)
    probes = _unit_circle((order_angles + nxt) / 2.0)
    ranks = np.argsort(pts @ probes.T, axis=0, kind="stable")
    lo, hi = (n - 1) // 2, n // 2
    centers = np.unique(np.sort(np.stack((ranks[lo], ranks[hi]), axis=1), axis=1), axis=0)

    ii, jj = np.triu_indices(n, k=0)
    pair_sums = pts[ii] + pts[jj]
    mad_angles = [
        _normal_angles(pair_sums - (pts[a] + pts[b])) for a, b in centers
    ]
    angles = np.unique(np.concatenate([order_angles, *mad_angles]))
    return _unit_circle(angles)


def _evaluation_directions(points: np.ndarray, dirs: DirectionSet) -> np.ndarray:
    if dirs.kind is DirectionKind.EXACT_2D_CIRCULAR:
        return np.vstack((critical_directions_2d(points), dirs.directions))
    return dirs.directions


def _outlyingness(queries: np.ndarray, points: np.ndarray, directions: np.ndarray) -> np.ndarray:
    proj = points @ directions.T
    med = np.median(proj, axis=0)
    spread = np.median(np.abs(proj - med), axis=0)
    dev = np.abs(queries @ directions.T - med)
    scale = np.max(np.abs(proj), axis=0) + np.max(np.abs(queries @ directions.T), axis=0)
    tol = 1e-12 * np.maximum(scale, 1.0)
    degenerate = spread <= tol
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(degenerate, 0.0, dev / np.where(degenerate, 1.0, spread))
    # zero MAD: the direction contributes 0 at the median and infinity elsewhere
    ratio = np.where(degenerate & (dev > tol), np.inf, ratio)
    return ratio.max(axis=1)


def _check(sample, dirs: DirectionSet | None) -> tuple[np.ndarray, DirectionSet]:
    points = sample.points if isinstance(sample, MultivariateSample) else np.asarray(sample, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.size == 0:
        raise DataError("empty sample")
    if dirs is None:
        dirs = default_directions(points.shape[1])
    if dirs.dim != points.shape[1]:
        raise ValueError(f"directions live in R^{dirs.dim}, sample in R^{points.shape[1]}")
    return points, dirs


def outlyingness(x, sample, dirs: DirectionSet | None = None) -> float:
    points, dirs = _check(sample, dirs)
    query = np.asarray(x, dtype=float).reshape(1, -1)
    return float(_outlyingness(query, points, _evaluation_directions(points, dirs))[0])


def projection_depths(queries, sample, dirs: DirectionSet | None = None) -> np.ndarray:
    """Projection depth of several query points with respect to ``sample``."""
    points, dirs = _check(sample, dirs)
    q = np.asarray(queries, dtype=float).reshape(-1, points.shape[1])
    out = _outlyingness(q, points, _evaluation_directions(points, dirs))
    return 1.0 / (1.0 + out)


def projection_depth(x, sample, dirs: DirectionSet | None = None) -> float:
    """Projection depth ``1 / (1 + O(x))``; 0 when ``O`` is infinite.

    Parameters
    ----------
    x : array-like of shape (l,)
        Query point.
    sample : MultivariateSample or array-like of shape (n, l)
    dirs : DirectionSet, optional
        Defaults to the exact set for ``l <= 2`` and 10 000 seeded Monte Carlo
        directions otherwise.
    """
    return float(projection_depths(np.atleast_1d(x), sample, dirs)[0])


def _tie_merged(values: np.ndarray, rtol: float) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    merged = values.copy()
    anchor = values[order[0]]
    for idx in order[1:]:
        if values[idx] - anchor <= rtol * max(abs(anchor), 1.0):
            merged[idx] = anchor
        else:
            anchor = values[idx]
    return merged


def depth_ranks(sample, dirs: DirectionSet | None = None, rtol: float = DEPTH_TIE_RTOL) -> np.ndarray:
    """Mid-ranks of pooled-sample projection depths, 1 = most outlying.

    Depths closer than ``rtol`` (relative) are treated as ties so that exact
    symmetries survive rounding noise.
    """
    points, dirs = _check(sample, dirs)
    depths = projection_depths(points, points, dirs)
    return mid_ranks(_tie_merged(depths, rtol))
