"""Domain types, CSV ingestion and the subsidy aggregation ``h``.

Two on-disk formats are read here:

``subsidies.csv``
    long format, header ``unit,year,subsidy_type,amount,population``.
``outcomes.csv``
    wide format, header ``unit,<name1>,...,<namel>``.

Functional samples are written and read in the long ``unit,t,value`` layout
also produced by the ``replicate`` command.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "UnitId",
    "SubsidyRecord",
    "FunctionalSample",
    "MultivariateSample",
    "DepthMethod",
    "DepthVector",
    "load_subsidies",
    "load_outcomes",
    "aggregate_h",
    "read_curves",
    "write_curves",
    "format_float",
]

SUBSIDY_HEADER = ["unit", "year", "subsidy_type", "amount", "population"]
CURVE_HEADER = ["unit", "t", "value"]


def format_float(x: float) -> str:
    """17 significant digits, enough for an exact round trip."""
    return format(float(x), ".17g")


@dataclass(frozen=True, order=True)
class UnitId:
    index: int
    name: str


def make_units(names: Sequence[str]) -> tuple[UnitId, ...]:
    if len(set(names)) != len(names):
        raise DataError("duplicate unit")
    return tuple(UnitId(i, str(name)) for i, name in enumerate(names))


@dataclass(frozen=True)
class SubsidyRecord:
    unit: UnitId
    year: int
    subsidy_type: str
    amount: float
    population: float

    def __post_init__(self):
        if not self.amount >= 0:
            raise DataError("negative amount")
        if not self.population > 0:
            raise DataError("non-positive population")


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``n`` curves observed on a shared, strictly increasing grid of ``m`` points."""

    grid: np.ndarray
    curves: np.ndarray
    units: tuple[UnitId, ...]

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float).ravel()
        curves = np.atleast_2d(np.asarray(self.curves, dtype=float))
        if grid.size < 1:
            raise DataError("empty grid")
        if np.any(np.diff(grid) <= 0):
            raise DataError("grid must be strictly increasing")
        if curves.shape[0] < 1 or curves.shape[1] != grid.size:
            raise DataError(f"curves shape {curves.shape} does not match grid of {grid.size} points")
        if not np.all(np.isfinite(curves)):
            raise DataError("curves contain missing or non-finite values")
        if len(self.units) != curves.shape[0]:
            raise DataError("one unit per curve required")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "units", tuple(self.units))

    @classmethod
    def from_arrays(cls, grid, curves, names: Sequence[str] | None = None) -> "FunctionalSample":
        curves = np.atleast_2d(np.asarray(curves, dtype=float))
        if names is None:
            names = [f"u{i}" for i in range(curves.shape[0])]
        return cls(grid, curves, make_units(list(names)))

    @property
    def n(self) -> int:
        return self.curves.shape[0]

    @property
    def m(self) -> int:
        return self.grid.size

    @property
    def names(self) -> list[str]:
        return [u.name for u in self.units]

    def subset(self, indices: Iterable[int]) -> "FunctionalSample":
        idx = sorted(indices)
        return FunctionalSample(self.grid, self.curves[idx], tuple(self.units[i] for i in idx))

    def __eq__(self, other):
        if not isinstance(other, FunctionalSample):
            return NotImplemented
        return (
            self.units == other.units
            and np.array_equal(self.grid, other.grid)
            and np.array_equal(self.curves, other.curves)
        )


@dataclass(frozen=True, eq=False)
class MultivariateSample:
    points: np.ndarray
    units: tuple[UnitId, ...]
    variable_names: tuple[str, ...]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DataError("points must be a non-empty n x l matrix")
        if len(self.units) != pts.shape[0]:
            raise DataError("one unit per row required")
        if len(self.variable_names) != pts.shape[1]:
            raise DataError("one name per variable required")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "variable_names", tuple(self.variable_names))

    @classmethod
    def from_arrays(cls, points, names: Sequence[str] | None = None,
                    variable_names: Sequence[str] | None = None) -> "MultivariateSample":
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if names is None:
            names = [f"u{i}" for i in range(pts.shape[0])]
        if variable_names is None:
            variable_names = [f"a{j + 1}" for j in range(pts.shape[1])]
        return cls(pts, make_units(list(names)), tuple(variable_names))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def names(self) -> list[str]:
        return [u.name for u in self.units]

    def aligned_to(self, units: Sequence[UnitId]) -> "MultivariateSample":
        """Reorder rows to follow ``units`` (matched by name)."""
        pos = {u.name: i for i, u in enumerate(self.units)}
        wanted = [u.name for u in units]
        if set(wanted) != set(pos):
            missing = sorted(set(wanted) ^ set(pos))
            raise DataError(f"trajectories and outcomes cover different units: {missing}")
        rows = [pos[name] for name in wanted]
        return MultivariateSample(self.points[rows], tuple(units), self.variable_names)


class DepthMethod(str, Enum):
    MBD = "mbd"
    FM = "fm"
    ED = "ed"
    PROJECTION = "projection"

    @classmethod
    def parse(cls, value) -> "DepthMethod":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown depth method {value!r}") from None


@dataclass(frozen=True, eq=False)
class DepthVector:
    values: np.ndarray
    method: DepthMethod
    units: tuple[UnitId, ...] = field(default=())

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).ravel()
        if np.any(vals < 0) or np.any(vals > 1) or np.any(np.isnan(vals)):
            raise ValueError("depth values must lie in [0, 1]")
        if self.units and len(self.units) != vals.size:
            raise ValueError("one unit per depth value required")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "method", DepthMethod.parse(self.method))

    def __len__(self):
        return self.values.size


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows:
        raise DataError(f"{path}: missing header row")
    header = [h.strip() for h in rows[0]]
    return header, [[c.strip() for c in r] for r in rows[1:]]


def _parse_float(text: str, what: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"line {lineno}: non-numeric {what} {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"line {lineno}: non-finite {what}")
    return value


def load_subsidies(path) -> list[SubsidyRecord]:
    """Read a long-format subsidy file.

    Units are indexed in order of first appearance. Raises :class:`DataError`
    on malformed rows, negative amounts, non-positive populations and
    duplicated ``(unit, year, subsidy_type)`` keys.
    """
    header, rows = _read_rows(path)
    if header != SUBSIDY_HEADER:
        raise DataError(f"expected header {','.join(SUBSIDY_HEADER)}")
    units: dict[str, UnitId] = {}
    seen = set()
    records = []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(SUBSIDY_HEADER):
            raise DataError(f"line {lineno}: expected {len(SUBSIDY_HEADER)} columns, got {len(row)}")
        name, year_text, kind, amount_text, pop_text = row
        try:
            year = int(year_text)
        except ValueError:
            raise DataError(f"line {lineno}: non-integer year {year_text!r}") from None
        amount = _parse_float(amount_text, "amount", lineno)
        population = _parse_float(pop_text, "population", lineno)
        if amount < 0:
            raise DataError(f"line {lineno}: negative amount")
        if population <= 0:
            raise DataError(f"line {lineno}: non-positive population")
        key = (name, year, kind)
        if key in seen:
            raise DataError(f"line {lineno}: duplicate record for {key}")
        seen.add(key)
        unit = units.setdefault(name, UnitId(len(units), name))
        records.append(SubsidyRecord(unit, year, kind, amount, population))
    return records


def load_outcomes(path) -> MultivariateSample:
    header, rows = _read_rows(path)
    if len(header) < 2 or header[0] != "unit":
        raise DataError("expected header unit,<name1>,...")
    width = len(header)
    names, points = [], []
    for lineno, row in enumerate(rows, start=2):
        if len(row) != width:
            raise DataError(f"line {lineno}: ragged row ({len(row)} columns, expected {width})")
        if row[0] in names:
            raise DataError(f"line {lineno}: duplicate unit {row[0]!r}")
        names.append(row[0])
        points.append([_parse_float(c, "cell", lineno) for c in row[1:]])
    if not names:
        raise DataError("outcomes file has no data rows")
    return MultivariateSample(np.array(points, dtype=float), make_units(names), tuple(header[1:]))


def aggregate_h(records: Iterable[SubsidyRecord]) -> FunctionalSample:
    """Per-capita total subsidy ``S^v(t) = sum_type amount / population``.

    The grid is the set of years observed for every unit; a year missing for
    one unit is dropped for all of them. Sums use :func:`math.fsum` so the
    result does not depend on record order.
    """
    amounts: dict[UnitId, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    populations: dict[tuple[UnitId, int], float] = {}
    for rec in records:
        amounts[rec.unit][rec.year].append(rec.amount)
        prev = populations.setdefault((rec.unit, rec.year), rec.population)
        if prev != rec.population:
            raise DataError(f"inconsistent population for {rec.unit.name} in {rec.year}")
    if not amounts:
        raise DataError("no subsidy records")
    units = sorted(amounts)
    common = set.intersection(*(set(amounts[u]) for u in units))
    if not common:
        raise DataError("no common years")
    grid = sorted(common)
    curves = np.array(
        [[math.fsum(amounts[u][y]) / populations[(u, y)] for y in grid] for u in units]
    )
    # re-index so that UnitId.index matches the row order of the sample
    reindexed = make_units([u.name for u in units])
    return FunctionalSample(np.array(grid, dtype=float), curves, reindexed)


def write_curves(sample: FunctionalSample, path_or_file) -> None:
    """Write a sample in long ``unit,t,value`` form."""
    def _emit(fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for unit, row in zip(sample.units, sample.curves):
            for t, v in zip(sample.grid, row):
                writer.writerow([unit.name, format_float(t), format_float(v)])

    if hasattr(path_or_file, "write"):
        _emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
            _emit(fh)


def read_curves(path) -> FunctionalSample:
    header, rows = _read_rows(path)
    if header != CURVE_HEADER:
        raise DataError(f"expected header {','.join(CURVE_HEADER)}")
    data: dict[str, dict[float, float]] = {}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise DataError(f"line {lineno}: expected 3 columns, got {len(row)}")
        t = _parse_float(row[1], "t", lineno)
        v = _parse_float(row[2], "value", lineno)
        per_unit = data.setdefault(row[0], {})
        if t in per_unit:
            raise DataError(f"line {lineno}: duplicate point ({row[0]}, {row[1]})")
        per_unit[t] = v
    if not data:
        raise DataError("curve file has no data rows")
    grids = {tuple(sorted(pts)) for pts in data.values()}
    if len(grids) != 1:
        raise DataError("units are observed on different grids")
    grid = sorted(next(iter(grids)))
    names = list(data)
    curves = np.array([[data[name][t] for t in grid] for name in names])
    return FunctionalSample(np.array(grid), curves, make_units(names))
