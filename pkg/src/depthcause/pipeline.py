"""Centrality-oriented causality procedure.

One run of the procedure

1. optionally replaces each unit's short series by a long series simulated
   from its deepest-regression line,
2. computes a functional depth of every trajectory and splits the units into
   a central group F and a peripheral group C,
3. ranks the outcome vectors by projection depth in the pooled sample,
4. sums the ranks over group C.

:func:`run_pipeline` nests this in ``outer_reps x inner_reps`` Monte Carlo
loops and compares the result with groups of the same size drawn at random.
Every inner run owns the substream ``(0, outer, inner)`` of the root seed,
the random baseline ``(1,)`` and the permutation p-value ``(2,)``; results
are therefore identical for any number of worker processes.
"""

from __future__ import annotations

import dataclasses
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .data_model import DepthMethod, DepthVector, FunctionalSample, MultivariateSample
from .depth_regression import LinearFit, deepest_line
from .errors import DataError, DegenerateAnalysisError
from .functional_depth import (
    MedianDifference,
    _ed_values,
    _fm_values,
    _mbd_values,
    causal_strength,
    functional_depth,
    median_difference,
)
from .multivariate_depth import default_directions, depth_ranks
from .rank_tests import WilcoxonResult, permutation_pvalue, wilcoxon_sum
from .stats_core import RandomStream

__all__ = [
    "SplitMode",
    "Replication",
    "PipelineConfig",
    "GroupSplit",
    "CausalReport",
    "split_groups",
    "outlyingness_split",
    "replicate_sample",
    "run_once",
    "run_baseline",
    "run_pipeline",
]

FUNCTIONAL_METHODS = (DepthMethod.MBD, DepthMethod.FM, DepthMethod.ED)
INNER_CHUNK = 128


class SplitMode(str, Enum):
    THRESHOLD = "threshold"
    QUANTILE = "quantile"


class Replication(str, Enum):
    NONE = "none"
    LINEAR = "linear"


@dataclass(frozen=True)
class PipelineConfig:
    depth_method: DepthMethod = DepthMethod.MBD
    split_mode: SplitMode = SplitMode.THRESHOLD
    alpha: float = 0.5
    quantile: float = 0.25
    replication: Replication = Replication.LINEAR
    m: int = 500
    inner_reps: int = 1000
    outer_reps: int = 100
    baseline_reps: int = 1000
    seed: int = 0
    outlyingness_variant: bool = False
    one_sided_fraction: float = 0.8
    direction_count: int = 10_000
    scale: str = "mad"
    tau: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "depth_method", DepthMethod.parse(self.depth_method))
        object.__setattr__(self, "split_mode", SplitMode(self.split_mode))
        object.__setattr__(self, "replication", Replication(self.replication))
        if self.depth_method not in FUNCTIONAL_METHODS:
            raise ValueError("depth_method must be one of mbd, fm, ed")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 < self.quantile < 1:
            raise ValueError("quantile must lie in (0, 1)")
        if not 0 <= self.one_sided_fraction < 1:
            raise ValueError("one_sided_fraction must lie in [0, 1)")
        if self.outer_reps < 1 or self.inner_reps < 1 or self.baseline_reps < 1:
            raise ValueError("repetition counts must be at least 1")
        if self.replication is Replication.LINEAR and self.m < 2:
            raise ValueError("replication needs m >= 2")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.direction_count < 1:
            raise ValueError("direction_count must be positive")
        if self.scale not in ("mad", "sd"):
            raise ValueError("scale must be 'mad' or 'sd'")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class GroupSplit:
    """Central (factual) group F and peripheral (counterfactual) group C."""

    F: tuple[int, ...]
    C: tuple[int, ...]

    def __post_init__(self):
        F, C = tuple(sorted(self.F)), tuple(sorted(self.C))
        if not C:
            raise DegenerateAnalysisError("empty group C")
        if not F:
            raise DegenerateAnalysisError("empty group F")
        if set(F) & set(C):
            raise ValueError("groups overlap")
        if sorted(F + C) != list(range(len(F) + len(C))):
            raise ValueError("groups must cover all units")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return len(self.F) + len(self.C)

    def labels(self) -> list[str]:
        out = ["F"] * self.n
        for i in self.C:
            out[i] = "C"
        return out


@dataclass(frozen=True)
class CausalReport:
    method: DepthMethod
    outer_means: np.ndarray
    grand_mean_w: float
    sd_of_means: float
    baseline_mean_w: float
    baseline_sd: float
    null_mean: float
    split: GroupSplit
    depth_table: dict
    median_difference: MedianDifference
    strength: float
    p_value: float
    modal_split: GroupSplit
    modal_split_share: float
    units: tuple = field(default=())


def _depth_values(depths) -> np.ndarray:
    return depths.values if isinstance(depths, DepthVector) else np.asarray(depths, dtype=float)


def split_groups(depths, cfg: PipelineConfig) -> GroupSplit:
    """Split units by depth.

    ``THRESHOLD``: F holds depths ``>= alpha``. ``QUANTILE``: C holds the
    ``floor(q n)`` smallest depths, ties going to the lower unit index.
    """
    d = _depth_values(depths)
    n = d.size
    if n < 2:
        raise DegenerateAnalysisError("need at least two units to split")
    if cfg.split_mode is SplitMode.THRESHOLD:
        central = d >= cfg.alpha
        F = np.flatnonzero(central)
        C = np.flatnonzero(~central)
    else:
        k = int(np.floor(cfg.quantile * n))
        order = np.argsort(d, kind="stable")
        C, F = order[:k], order[k:]
    return GroupSplit(tuple(int(i) for i in F), tuple(int(i) for i in C))


def outlyingness_split(depths, functional, cfg: PipelineConfig) -> GroupSplit:
    """Outlyingness-oriented split.

    F collects low-depth curves (depth at or below the median depth, the
    functional median itself excluded) that lie strictly above, or strictly
    below, the functional median on more than ``cfg.one_sided_fraction`` of
    the grid. C is the remainder.
    """
    d = _depth_values(depths)
    curves = functional.curves if isinstance(functional, FunctionalSample) else np.asarray(functional, dtype=float)
    if d.size < 2:
        raise DegenerateAnalysisError("need at least two units to split")
    centre = int(np.flatnonzero(d == d.max())[0])
    above = (curves > curves[centre]).mean(axis=1)
    below = (curves < curves[centre]).mean(axis=1)
    one_sided = np.maximum(above, below) > cfg.one_sided_fraction
    low = d <= np.median(d)
    low[centre] = False
    qualifies = low & one_sided
    return GroupSplit(
        tuple(int(i) for i in np.flatnonzero(qualifies)),
        tuple(int(i) for i in np.flatnonzero(~qualifies)),
    )


def _split(depths, curves, cfg: PipelineConfig) -> GroupSplit:
    if cfg.outlyingness_variant:
        return outlyingness_split(depths, curves, cfg)
    return split_groups(depths, cfg)


def fit_lines(functional: FunctionalSample, scale: str = "mad") -> list[LinearFit]:
    return [deepest_line(functional.grid, row, scale) for row in functional.curves]


def replicate_sample(functional: FunctionalSample, fits, m: int, stream: RandomStream) -> FunctionalSample:
    """Replace every curve with a simulated ``m``-point series from its fit.

    Units draw their noise from ``stream`` in unit order, exactly as
    successive calls to :func:`replicate_series` would.
    """
    grid = np.linspace(functional.grid[0], functional.grid[-1], m)
    noise = stream.normal((functional.n, m))
    slopes = np.array([f.slope for f in fits])
    intercepts = np.array([f.intercept for f in fits])
    sigmas = np.array([f.sigma for f in fits])
    curves = intercepts[:, None] + slopes[:, None] * grid + sigmas[:, None] * noise
    return FunctionalSample(grid, curves, functional.units)


def _aligned(functional: FunctionalSample, outcomes: MultivariateSample) -> MultivariateSample:
    if functional.n != outcomes.n:
        raise DataError(f"{functional.n} trajectories but {outcomes.n} outcome rows")
    return outcomes.aligned_to(functional.units)


def _outcome_ranks(functional, outcomes, cfg) -> np.ndarray:
    aligned = _aligned(functional, outcomes)
    dirs = default_directions(aligned.points.shape[1], cfg.direction_count, cfg.seed)
    return depth_ranks(aligned, dirs)


def _needs_fits(cfg: PipelineConfig) -> bool:
    return cfg.replication is Replication.LINEAR


def run_once(functional: FunctionalSample, outcomes: MultivariateSample, cfg: PipelineConfig,
             stream: RandomStream, *, ranks=None, fits=None) -> WilcoxonResult:
    """One pass of replicate, split, rank and sum.

    ``ranks`` and ``fits`` may be passed in to avoid recomputing quantities
    that do not depend on the stream.
    """
    if ranks is None:
        ranks = _outcome_ranks(functional, outcomes, cfg)
    sample = functional
    if _needs_fits(cfg):
        if fits is None:
            fits = fit_lines(functional, cfg.scale)
        sample = replicate_sample(functional, fits, cfg.m, stream)
    depths = functional_depth(sample, cfg.depth_method)
    split = _split(depths, sample.curves, cfg)
    return wilcoxon_sum(ranks, split.C)


def _batch_depths(curves: np.ndarray, method: DepthMethod) -> np.ndarray:
    if method is DepthMethod.MBD:
        return _mbd_values(curves)
    if method is DepthMethod.FM:
        return _fm_values(curves)
    return np.stack([_ed_values(c) for c in curves])


def _outer_rep(functional, ranks, fits, cfg: PipelineConfig, outer: int):
    """Inner loop of one outer repetition: rank sums, null means and C groups."""
    grid = np.linspace(functional.grid[0], functional.grid[-1], cfg.m)
    slopes = np.array([f.slope for f in fits])[:, None]
    intercepts = np.array([f.intercept for f in fits])[:, None]
    sigmas = np.array([f.sigma for f in fits])[:, None]
    trend = intercepts + slopes * grid
    w, null_means, groups = [], [], []
    for start in range(0, cfg.inner_reps, INNER_CHUNK):
        stop = min(start + INNER_CHUNK, cfg.inner_reps)
        noise = np.stack([
            RandomStream(cfg.seed, (0, outer, j)).normal((functional.n, cfg.m))
            for j in range(start, stop)
        ])
        curves = trend + sigmas * noise
        depths = _batch_depths(curves, cfg.depth_method)
        for k, j in enumerate(range(start, stop)):
            try:
                split = _split(depths[k], curves[k], cfg)
            except DegenerateAnalysisError as exc:
                raise DegenerateAnalysisError(f"{exc} (outer repetition {outer}, inner {j})") from None
            res = wilcoxon_sum(ranks, split.C)
            w.append(res.w)
            null_means.append(res.null_mean)
            groups.append(split.C)
    return np.array(w), np.array(null_means), groups


def run_baseline(outcomes: MultivariateSample, n_c: int, reps: int, stream: RandomStream,
                 *, ranks=None, dirs=None) -> tuple[float, float]:
    """Mean and SD of the rank sum over ``reps`` random groups of size ``n_c``."""
    if ranks is None:
        ranks = depth_ranks(outcomes, dirs)
    ranks = np.asarray(ranks, dtype=float)
    if not 1 <= n_c < ranks.size:
        raise ValueError(f"n_c must lie in [1, {ranks.size - 1}]")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    w = ranks[stream.subsets(ranks.size, n_c, reps)].sum(axis=1)
    sd = float(np.std(w, ddof=1)) if reps > 1 else 0.0
    return float(np.mean(w)), sd


def run_pipeline(functional: FunctionalSample, outcomes: MultivariateSample, cfg: PipelineConfig,
                 workers: int | None = 1) -> CausalReport:
    """Full Monte Carlo procedure; see the module docstring.

    ``workers`` > 1 distributes outer repetitions over a process pool.
    Results do not depend on it.
    """
    ranks = _outcome_ranks(functional, outcomes, cfg)

    depth_table = {
        method: functional_depth(functional, method, warn=method is cfg.depth_method)
        for method in FUNCTIONAL_METHODS
        if functional.n >= 2 or method is not DepthMethod.MBD
    }
    original = depth_table[cfg.depth_method]
    split = _split(original, functional.curves, cfg)

    if _needs_fits(cfg):
        fits = fit_lines(functional, cfg.scale)
        args = [(functional, ranks, fits, cfg, r) for r in range(cfg.outer_reps)]
        if workers is not None and workers > 1 and cfg.outer_reps > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_outer_rep_star, args))
        else:
            results = [_outer_rep_star(a) for a in args]
    else:
        # without replication every run reproduces the split of the original data
        res = wilcoxon_sum(ranks, split.C)
        results = [
            (np.full(cfg.inner_reps, res.w), np.full(cfg.inner_reps, res.null_mean), [split.C] * cfg.inner_reps)
            for _ in range(cfg.outer_reps)
        ]

    outer_means = np.array([w.mean() for w, _, _ in results])
    grand_mean = float(outer_means.mean())
    sd_means = float(np.std(outer_means, ddof=1)) if outer_means.size > 1 else 0.0
    null_mean = float(np.mean(np.concatenate([nm for _, nm, _ in results])))

    counts = Counter(c for _, _, groups in results for c in groups)
    modal_c, modal_count = min(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    total = cfg.outer_reps * cfg.inner_reps
    modal = GroupSplit(tuple(i for i in range(functional.n) if i not in set(modal_c)), modal_c)

    # the random baseline and p-value refer to the groups actually compared
    base_mean, base_sd = run_baseline(
        outcomes, len(modal.C), cfg.baseline_reps, RandomStream(cfg.seed, (1,)), ranks=ranks
    )
    p_value = permutation_pvalue(ranks, modal.C, cfg.baseline_reps, RandomStream(cfg.seed, (2,)))
    md = median_difference(functional.subset(split.F), functional.subset(split.C), cfg.depth_method)

    return CausalReport(
        method=cfg.depth_method,
        outer_means=outer_means,
        grand_mean_w=grand_mean,
        sd_of_means=sd_means,
        baseline_mean_w=base_mean,
        baseline_sd=base_sd,
        null_mean=null_mean,
        split=split,
        depth_table=depth_table,
        median_difference=md,
        strength=causal_strength(md, cfg.tau),
        p_value=p_value,
        modal_split=modal,
        modal_split_share=modal_count / total,
        units=functional.units,
    )


def _outer_rep_star(args):
    return _outer_rep(*args)
