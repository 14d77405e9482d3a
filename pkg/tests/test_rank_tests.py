import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from depthcause.rank_tests import permutation_pvalue, wilcoxon_sum
from depthcause.stats_core import RandomStream, mid_ranks
from oracles import exact_permutation_pvalue


def test_wilcoxon_examples():
    res = wilcoxon_sum([1, 2, 3], [2])
    assert res.w == 3 and res.n_c == 1 and res.n_f == 2
    res = wilcoxon_sum(np.arange(1, 17), range(7))
    assert res.null_mean == 59.5
    assert res.null_sd ** 2 == pytest.approx(7 * 9 * 17 / 12)


@pytest.mark.parametrize("group", [[], list(range(5))])
def test_wilcoxon_rejects_degenerate_groups(group):
    with pytest.raises(ValueError):
        wilcoxon_sum(np.arange(1, 6), group)


def test_wilcoxon_rejects_bad_index():
    with pytest.raises(IndexError):
        wilcoxon_sum(np.arange(1, 6), [7])


@given(st.lists(st.integers(0, 6), min_size=2, max_size=30), st.data())
def test_rank_sum_identity_and_moments(values, data):
    ranks = mid_ranks(values)
    n = ranks.size
    group = data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n - 1))
    res = wilcoxon_sum(ranks, group)
    rest = sorted(set(range(n)) - group)
    assert res.w + wilcoxon_sum(ranks, rest).w == n * (n + 1) / 2
    assert res.w_f == wilcoxon_sum(ranks, rest).w
    assert res.null_mean == res.n_c * (n + 1) / 2
    # tie-corrected variance agrees with the exact permutation variance
    n_c = len(group)
    exact_var = n_c * (n - n_c) / (n * (n - 1)) * np.sum((ranks - ranks.mean()) ** 2)
    assert res.null_sd ** 2 == pytest.approx(exact_var, rel=1e-12, abs=1e-12)


@given(st.permutations(list(range(12))), st.integers(1, 11))
def test_relabeling_invariance(perm, k):
    ranks = mid_ranks(np.arange(12) % 5)
    group = list(range(k))
    perm = np.asarray(perm)
    moved = np.empty_like(ranks)
    moved[perm] = ranks
    assert wilcoxon_sum(moved, perm[group]).w == wilcoxon_sum(ranks, group).w


def test_mean_of_w_under_random_groups():
    n, k = 16, 7
    ranks = np.arange(1.0, n + 1)
    draws = RandomStream(3, 0).subsets(n, k, 1000)
    ws = np.array([wilcoxon_sum(ranks, row).w for row in draws])
    res = wilcoxon_sum(ranks, draws[0])
    assert abs(ws.mean() - res.null_mean) <= 3 * res.null_sd / np.sqrt(1000)


@pytest.mark.parametrize("seed", range(4))
def test_pvalue_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 13))
    ranks = mid_ranks(rng.integers(0, n, n))
    group = rng.choice(n, int(rng.integers(1, n)), replace=False)
    p = permutation_pvalue(ranks, group, 100_000, RandomStream(seed, 2))
    assert p == pytest.approx(exact_permutation_pvalue(ranks, group), abs=0.02)


def test_pvalue_deepest_group():
    ranks = np.arange(1.0, 17.0)
    group = list(range(9, 16))
    p = permutation_pvalue(ranks, group, 10_000, RandomStream(1, 2))
    assert p == pytest.approx(exact_permutation_pvalue(ranks, group), abs=0.01)


def test_pvalue_single_rep():
    ranks = np.arange(1.0, 11.0)
    seen = {permutation_pvalue(ranks, [s % 10, (s + 3) % 10], 1, RandomStream(s, 2)) for s in range(40)}
    assert seen <= {0.5, 1.0}
    assert seen == {0.5, 1.0}


def test_pvalue_uniform_under_null():
    n, k = 40, 20
    ranks = np.arange(1.0, n + 1)
    groups = RandomStream(77, 0).subsets(n, k, 1000)
    ps = np.array([permutation_pvalue(ranks, g, 200, RandomStream(77, (2, i))) for i, g in enumerate(groups)])
    # discreteness of p in steps of 1/201 is small next to the KS critical value
    assert stats.kstest(ps, "uniform").pvalue > 0.001


def test_pvalue_rejects_zero_reps():
    with pytest.raises(ValueError):
        permutation_pvalue([1, 2, 3], [0], 0, RandomStream(0))
