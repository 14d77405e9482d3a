"""Robust univariate primitives and seeded random streams.

Every stochastic routine in the package draws from a :class:`RandomStream`.
A stream is identified by a root seed and a substream key; the same
``(seed, key)`` pair always yields the same variates, so Monte Carlo loops
can hand one substream to each repetition and produce identical results
whether they run serially or in a process pool.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "median",
    "mad",
    "ecdf",
    "mid_ranks",
    "RandomStream",
    "normal_variate",
]


def _as_nonempty(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError("empty input")
    return arr


def median(x) -> float:
    """Sample median; the midpoint of the central pair when ``len(x)`` is even."""
    return float(np.median(_as_nonempty(x)))


def mad(x) -> float:
    """Raw (unscaled) median absolute deviation about the median."""
    arr = _as_nonempty(x)
    return float(np.median(np.abs(arr - np.median(arr))))


def ecdf(x, q: float) -> float:
    """Right-continuous empirical CDF of ``x`` evaluated at ``q``."""
    arr = _as_nonempty(x)
    return float(np.count_nonzero(arr <= q)) / arr.size


def mid_ranks(x) -> np.ndarray:
    """Ascending ranks 1..n, tied values sharing the mean of their rank range."""
    return rankdata(_as_nonempty(x), method="average")


class RandomStream:
    """Deterministic source of variates for one Monte Carlo substream.

    Parameters
    ----------
    seed : int
        Root seed, an unsigned 64-bit integer.
    stream_id : int or tuple of int
        Substream index. Tuples address nested substreams, e.g.
        ``(0, outer_rep, inner_rep)``.
    """

    def __init__(self, seed: int, stream_id: int | tuple[int, ...] = 0):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        key = (stream_id,) if isinstance(stream_id, (int, np.integer)) else tuple(stream_id)
        key = tuple(int(k) for k in key)
        if any(k < 0 for k in key):
            raise ValueError("stream_id components must be non-negative")
        self.seed = seed
        self.key = key
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key))
        )

    @property
    def stream_id(self) -> tuple[int, ...]:
        return self.key

    def child(self, index: int) -> "RandomStream":
        """Independent substream nested under this one."""
        return RandomStream(self.seed, self.key + (int(index),))

    def normal(self, size=None):
        """Standard-normal variates (a float when ``size`` is None)."""
        out = self._gen.standard_normal(size)
        return float(out) if size is None else out

    def uniform(self, size=None):
        out = self._gen.random(size)
        return float(out) if size is None else out

    def subsets(self, population: int, size: int, reps: int) -> np.ndarray:
        """``reps`` uniformly random ``size``-subsets of ``range(population)``.

        Returned as a ``(reps, size)`` integer array, one subset per row.
        """
        keys = self._gen.random((reps, population))
        return np.argsort(keys, axis=1, kind="stable")[:, :size]

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.key})"


def normal_variate(stream: RandomStream) -> float:
    """Next standard-normal variate of ``stream``."""
    return stream.normal()
