import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from depthcause.depth_regression import (
    LinearFit,
    deepest_line,
    regression_depth,
    replicate_series,
    sigma_hat,
)
from depthcause.stats_core import RandomStream
from oracles import regression_depth_oracle

seeds = st.integers(0, 2**32 - 1)


def _random_points(seed, lo=2, hi=12, integer=False):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(lo, hi + 1))
    if integer:
        return rng.integers(0, 6, n).astype(float), rng.integers(-4, 5, n).astype(float)
    return rng.normal(size=n) * 3, rng.normal(size=n) * 3


def test_regression_depth_examples():
    assert regression_depth((1.0, 0.0), [0, 1, 2], [0, 1, 2]) == 3
    assert regression_depth((1.0, 0.0), [0, 1, 2], [0, 1, 0]) == 2
    assert regression_depth(LinearFit(0.5, 1.0, 0), [2.0], [2.0]) == 1


def test_regression_depth_empty():
    with pytest.raises(ValueError):
        regression_depth((0.0, 0.0), [], [])


def test_deepest_line_examples():
    t = np.arange(6.0)
    fit = deepest_line(t, 2 * t + 1)
    assert (fit.slope, fit.intercept, fit.rdepth) == (2.0, 1.0, 6)
    assert fit.sigma == 0.0
    t = np.arange(10.0)
    y = t.copy()
    y[5] = 100.0
    fit = deepest_line(t, y)
    assert fit.slope == pytest.approx(1.0) and fit.intercept == pytest.approx(0.0, abs=1e-12)
    fit = deepest_line([0.0, 1.0], [0.0, 3.0])
    assert (fit.slope, fit.intercept, fit.rdepth) == (3.0, 0.0, 2)


def test_deepest_line_needs_two_distinct_t():
    with pytest.raises(ValueError, match="distinct"):
        deepest_line([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])


@given(seeds, st.booleans(), st.floats(-3, 3), st.floats(-3, 3))
def test_regression_depth_matches_oracle(seed, integer, slope, intercept):
    t, y = _random_points(seed, 1, 12, integer)
    if integer:
        slope, intercept = round(slope), round(intercept)
    assert regression_depth((slope, intercept), t, y) == regression_depth_oracle(slope, intercept, t, y)


@given(seeds, st.booleans())
def test_candidate_depths_match_oracle(seed, integer):
    t, y = _random_points(seed, 2, 9, integer)
    assume(np.unique(t).size >= 2)
    best = 0
    for i, j in combinations(range(t.size), 2):
        if t[i] != t[j]:
            b = (y[j] - y[i]) / (t[j] - t[i])
            a = y[i] - b * t[i]
            d = regression_depth_oracle(b, a, t, y)
            assert regression_depth((b, a), t, y) == d
            best = max(best, d)
    assert deepest_line(t, y).rdepth == best


@given(seeds, st.booleans())
def test_deepest_line_lower_bound(seed, integer):
    t, y = _random_points(seed, 2, 40, integer)
    assume(np.unique(t).size >= 2)
    assert deepest_line(t, y).rdepth >= math.ceil(t.size / 3)


@given(seeds, st.floats(-50, 50))
def test_shift_equivariance(seed, c):
    t, y = _random_points(seed, 3, 15)
    base, moved = deepest_line(t, y), deepest_line(t, y + c)
    assert moved.rdepth == base.rdepth
    assert moved.slope == pytest.approx(base.slope, rel=1e-9, abs=1e-9)
    assert moved.intercept == pytest.approx(base.intercept + c, rel=1e-9, abs=1e-9)


@given(seeds, st.floats(0.05, 20))
def test_time_scaling_equivariance(seed, k):
    t, y = _random_points(seed, 3, 15)
    base, moved = deepest_line(t, y), deepest_line(k * t, y)
    assert moved.rdepth == base.rdepth
    assert moved.slope == pytest.approx(base.slope / k, rel=1e-9, abs=1e-9)
    assert moved.intercept == pytest.approx(base.intercept, rel=1e-9, abs=1e-9)


def test_sigma_hat_examples():
    assert sigma_hat(np.zeros(5)) == 0.0
    assert sigma_hat([-1.0, 0.0, 1.0]) == pytest.approx(1.4826)
    z = RandomStream(11, 0).normal(100_000)
    assert sigma_hat(z) == pytest.approx(1.0, abs=0.02)
    assert sigma_hat(z, "sd") == pytest.approx(1.0, abs=0.02)
    with pytest.raises(ValueError):
        sigma_hat([])
    with pytest.raises(ValueError):
        sigma_hat([1.0], "iqr")


def test_replicate_series_without_noise():
    fit = LinearFit(0.5, 2.0, 3, 0.0)
    grid, y = replicate_series(fit, 0.0, 7.0, 8, RandomStream(0, 0))
    np.testing.assert_array_equal(grid, np.arange(8.0))
    np.testing.assert_allclose(y, 2.0 + 0.5 * grid, rtol=0, atol=1e-15)


def test_replicate_series_shape_and_determinism():
    fit = LinearFit(0.1, 5.0, 4, 0.3)
    a = replicate_series(fit, 2012.0, 2019.0, 500, RandomStream(8, (0, 1)))
    b = replicate_series(fit, 2012.0, 2019.0, 500, RandomStream(8, (0, 1)))
    assert a[0].size == 500 and a[0][0] == 2012.0 and a[0][-1] == 2019.0
    np.testing.assert_array_equal(a[1], b[1])


def test_replicate_series_noise_is_centred():
    m = 100_000
    fit = LinearFit(-1.0, 3.0, 2, 2.5)
    grid, y = replicate_series(fit, 0.0, 1.0, m, RandomStream(5, 0))
    assert abs(np.mean((y - fit(grid)) / fit.sigma)) < 4 / math.sqrt(m)


@pytest.mark.parametrize("m, t0, t1", [(0, 0.0, 1.0), (5, 1.0, 1.0), (5, 2.0, 1.0)])
def test_replicate_series_rejects(m, t0, t1):
    with pytest.raises(ValueError):
        replicate_series(LinearFit(0, 0, 1), t0, t1, m, RandomStream(0))
