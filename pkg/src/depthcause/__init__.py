"""Centrality-oriented causal inference with statistical depth functions."""

from .data_model import (
    DepthMethod,
    DepthVector,
    FunctionalSample,
    MultivariateSample,
    SubsidyRecord,
    UnitId,
    aggregate_h,
    load_outcomes,
    load_subsidies,
    read_curves,
    write_curves,
)
from .depth_regression import LinearFit, deepest_line, regression_depth, replicate_series, sigma_hat
from .errors import DataError, DegenerateAnalysisError, DepthCauseError, SparseGridWarning
from .functional_depth import (
    causal_strength,
    extremal_depth,
    fm_depth,
    functional_depth,
    functional_median,
    mbd,
    median_difference,
)
from .multivariate_depth import DirectionSet, depth_ranks, projection_depth
from .pipeline import (
    CausalReport,
    GroupSplit,
    PipelineConfig,
    Replication,
    SplitMode,
    outlyingness_split,
    run_baseline,
    run_once,
    run_pipeline,
    split_groups,
)
from .rank_tests import WilcoxonResult, permutation_pvalue, wilcoxon_sum
from .stats_core import RandomStream, ecdf, mad, median, mid_ranks, normal_variate

__version__ = "0.1.0"
