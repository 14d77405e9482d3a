"""Synthetic panels shaped like the 16-region, 2012-2019 subsidy study.

``null_dataset`` draws outcomes independently of the trajectories.
``planted_dataset`` ties them together: units whose subsidy trend is far
from the bulk also have outlying outcome vectors.
"""

from __future__ import annotations

import numpy as np

from .data_model import FunctionalSample, MultivariateSample, SubsidyRecord, UnitId

__all__ = ["YEARS", "null_dataset", "planted_dataset", "subsidy_records"]

# 2015 is absent from the source database
YEARS = np.array([2012, 2013, 2014, 2016, 2017, 2018, 2019], dtype=float)
N_UNITS = 16
N_OUTCOMES = 6


def _names(n: int) -> list[str]:
    return [f"region{i:02d}" for i in range(n)]


def null_dataset(seed: int, n: int = N_UNITS, l: int = N_OUTCOMES) -> tuple[FunctionalSample, MultivariateSample]:
    """Random linear trends with noise; outcomes independent of them."""
    rng = np.random.default_rng(seed)
    t = YEARS - YEARS[0]
    level = rng.normal(10.0, 2.0, size=(n, 1))
    slope = rng.normal(0.5, 0.2, size=(n, 1))
    curves = level + slope * t + rng.normal(0.0, 0.4, size=(n, t.size))
    outcomes = rng.normal(size=(n, l)) * rng.uniform(0.5, 3.0, size=l)
    names = _names(n)
    return (
        FunctionalSample.from_arrays(YEARS, curves, names),
        MultivariateSample.from_arrays(outcomes, names),
    )


def planted_dataset(seed: int, n_peripheral_above: int = 4, n_peripheral_below: int = 3,
                    n_central: int = 9, l: int = N_OUTCOMES, gap: float = 8.0,
                    noise: float = 0.5) -> tuple[FunctionalSample, MultivariateSample, np.ndarray]:
    """Planted trajectory/outcome association.

    Central units share one trend and one residual pattern, so their
    replicated series interleave; peripheral units sit ``gap`` noise SDs
    apart above and below them. Peripheral units get outcome vectors far
    from the centre, central ones a tight cloud. Returns the two samples and
    the indices of the peripheral units.
    """
    rng = np.random.default_rng(seed)
    n = n_central + n_peripheral_above + n_peripheral_below
    t = YEARS - YEARS[0]
    # high enough that every unit keeps non-negative subsidies
    base = 25.0 + 0.6 * t
    pattern = rng.normal(0.0, noise, size=t.size)
    pattern -= np.median(pattern)
    offsets = np.concatenate([
        rng.normal(0.0, 1e-3 * noise, size=n_central),
        gap * noise * np.arange(1, n_peripheral_above + 1),
        -gap * noise * np.arange(1, n_peripheral_below + 1),
    ])
    curves = base + pattern + offsets[:, None]

    centre = rng.normal(0.0, 0.3, size=(n_central, l))
    n_out = n - n_central
    directions = rng.normal(size=(n_out, l))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    outlying = directions * rng.uniform(6.0, 10.0, size=(n_out, 1))
    outcomes = np.vstack((centre, outlying)) * rng.uniform(0.5, 3.0, size=l)

    order = rng.permutation(n)
    names = _names(n)
    peripheral = np.sort(np.flatnonzero(order >= n_central))
    return (
        FunctionalSample.from_arrays(YEARS, curves[order], names),
        MultivariateSample.from_arrays(outcomes[order], names),
        peripheral,
    )


def subsidy_records(sample: FunctionalSample, types=("single_area", "legumes", "tomatoes", "soft_fruits"),
                    seed: int = 0) -> list[SubsidyRecord]:
    """Split each per-capita value into subsidy types times a population.

    Amounts are drawn so that they sum to ``value * population`` up to
    rounding; the aggregation therefore recovers the curves to ~1e-12.
    """
    rng = np.random.default_rng(seed)
    records = []
    for unit, row in zip(sample.units, sample.curves):
        population = float(rng.integers(900_000, 5_500_000))
        for year, value in zip(sample.grid, row):
            total = value * population
            shares = rng.dirichlet(np.ones(len(types)))
            for kind, share in zip(types, shares):
                records.append(SubsidyRecord(UnitId(unit.index, unit.name), int(year), kind,
                                             max(float(total * share), 0.0), population))
    return records
