import io
import os
import tempfile

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from depthcause.data_model import (
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
from depthcause.errors import DataError

HEADER = "unit,year,subsidy_type,amount,population\n"
TYPES = ["single_area", "legumes", "tomatoes", "soft_fruits"]


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _subsidy_text(units=16, years=range(2012, 2019), types=TYPES):
    lines = [HEADER]
    for u in range(units):
        for y in years:
            for k, kind in enumerate(types):
                lines.append(f"v{u},{y},{kind},{10 * (k + 1) + u},{100 + u}\n")
    return "".join(lines)


def test_load_subsidies_cardinality(tmp_path):
    records = load_subsidies(_write(tmp_path, "s.csv", _subsidy_text()))
    assert len(records) == 16 * 7 * 4
    assert [r.unit.index for r in records[:4]] == [0] * 4
    assert records[-1].unit == UnitId(15, "v15")


def test_load_subsidies_header_only(tmp_path):
    assert load_subsidies(_write(tmp_path, "s.csv", HEADER)) == []


@pytest.mark.parametrize("row, message", [
    ("a,2012,x,-1,100\n", "negative amount"),
    ("a,2012,x,1,0\n", "non-positive population"),
    ("a,2012,x,abc,100\n", "non-numeric amount"),
    ("a,2012,x,1\n", "expected 5 columns"),
    ("a,20x2,x,1,100\n", "non-integer year"),
    ("a,2012,x,1,100\na,2012,x,2,100\n", "duplicate"),
])
def test_load_subsidies_rejects(tmp_path, row, message):
    with pytest.raises(DataError, match=message):
        load_subsidies(_write(tmp_path, "s.csv", HEADER + row))


def test_load_subsidies_missing_file(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        load_subsidies(tmp_path / "nope.csv")


def test_load_subsidies_bad_header(tmp_path):
    with pytest.raises(DataError, match="header"):
        load_subsidies(_write(tmp_path, "s.csv", "unit,year,amount\n"))


def test_subsidy_record_validates():
    with pytest.raises(DataError, match="negative amount"):
        SubsidyRecord(UnitId(0, "a"), 2012, "x", -1.0, 10.0)


def test_load_outcomes(tmp_path):
    rows = "".join(f"v{i}," + ",".join(str(i * j) for j in range(6)) + "\n" for i in range(16))
    sample = load_outcomes(_write(tmp_path, "o.csv", "unit,a1,a2,a3,a4,a5,a6\n" + rows))
    assert sample.points.shape == (16, 6)
    assert sample.variable_names == ("a1", "a2", "a3", "a4", "a5", "a6")


def test_load_outcomes_single(tmp_path):
    sample = load_outcomes(_write(tmp_path, "o.csv", "unit,x\nonly,3.5\n"))
    assert sample.points.shape == (1, 1)
    assert sample.points[0, 0] == 3.5


@pytest.mark.parametrize("body, message", [
    ("a,1\na,2\n", "duplicate unit"),
    ("a,1\nb,2,3\n", "ragged"),
    ("a,one\n", "non-numeric"),
])
def test_load_outcomes_rejects(tmp_path, body, message):
    with pytest.raises(DataError, match=message):
        load_outcomes(_write(tmp_path, "o.csv", "unit,x\n" + body))


def _records(spec):
    units = {}
    out = []
    for name, year, kind, amount, pop in spec:
        unit = units.setdefault(name, UnitId(len(units), name))
        out.append(SubsidyRecord(unit, year, kind, amount, pop))
    return out


def test_aggregate_h_sum_over_types():
    sample = aggregate_h(_records([("a", 2012, t, a, 100.0) for t, a in zip(TYPES, [10, 20, 30, 40])]))
    assert sample.curves[0, 0] == 1.0
    np.testing.assert_array_equal(sample.grid, [2012.0])


def test_aggregate_h_drops_missing_year():
    spec = [(u, y, "x", 1.0, 10.0) for u in ("a", "b") for y in range(2012, 2020)]
    spec = [r for r in spec if not (r[0] == "b" and r[1] == 2015)]
    sample = aggregate_h(_records(spec))
    assert 2015.0 not in sample.grid
    assert sample.m == 7


def test_aggregate_h_disjoint_years():
    with pytest.raises(DataError, match="no common years"):
        aggregate_h(_records([("a", 2012, "x", 1.0, 1.0), ("b", 2013, "x", 1.0, 1.0)]))


def test_aggregate_h_uses_yearly_population():
    sample = aggregate_h(_records([("a", 2012, "x", 10.0, 10.0), ("a", 2013, "x", 10.0, 5.0)]))
    np.testing.assert_array_equal(sample.curves[0], [1.0, 2.0])


def test_aggregate_h_inconsistent_population():
    with pytest.raises(DataError, match="inconsistent population"):
        aggregate_h(_records([("a", 2012, "x", 1.0, 10.0), ("a", 2012, "y", 1.0, 11.0)]))


amount = st.one_of(st.just(0.0), st.floats(1e-6, 1e7, allow_nan=False, allow_infinity=False))


@given(st.lists(amount, min_size=12, max_size=12), st.randoms(use_true_random=False))
def test_aggregate_h_permutation_invariant(amounts, rnd):
    spec = [(u, y, t, amounts[i], 1000.0 + i)
            for i, (u, y, t) in enumerate((u, y, t) for u in "ab" for y in (2012, 2013, 2014) for t in "xy")]
    # population must be constant within (unit, year)
    spec = [(u, y, t, a, 1000.0 + 10 * ord(u) + y) for u, y, t, a, _ in spec]
    records = _records(spec)
    shuffled = list(records)
    rnd.shuffle(shuffled)
    assert aggregate_h(records) == aggregate_h(shuffled)


@given(st.lists(amount, min_size=6, max_size=6), st.integers(-8, 8))
def test_aggregate_h_scaling_power_of_two_exact(amounts, k):
    c = 2.0**k
    spec = [("a", y, t, amounts[i], 37.0) for i, (y, t) in enumerate((y, t) for y in (1, 2, 3) for t in "xy")]
    base = aggregate_h(_records(spec)).curves
    scaled = aggregate_h(_records([(u, y, t, c * a, p) for u, y, t, a, p in spec])).curves
    np.testing.assert_array_equal(scaled, c * base)


@given(st.lists(amount, min_size=6, max_size=6), st.floats(0.01, 100))
def test_aggregate_h_scaling_general(amounts, c):
    spec = [("a", y, t, amounts[i], 37.0) for i, (y, t) in enumerate((y, t) for y in (1, 2, 3) for t in "xy")]
    base = aggregate_h(_records(spec)).curves
    scaled = aggregate_h(_records([(u, y, t, c * a, p) for u, y, t, a, p in spec])).curves
    np.testing.assert_allclose(scaled, c * base, rtol=1e-14, atol=0)


@given(arrays(np.float64, (3, 5), elements=st.floats(-1e300, 1e300, allow_nan=False)))
def test_curves_round_trip_bit_exact(curves):
    grid = np.array([0.1, 1 / 3, 2.0, 1e5, 1e5 + 0.5])
    sample = FunctionalSample.from_arrays(grid, curves, ["a", "b", "c"])
    buf = io.StringIO()
    write_curves(sample, buf)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "c.csv")
        with open(path, "w") as fh:
            fh.write(buf.getvalue())
        back = read_curves(path)
    assert back == sample
    # -0.0 and 0.0 compare equal; everything else must match bit for bit
    same = (back.curves.view(np.int64) == sample.curves.view(np.int64)) | (sample.curves == 0)
    assert same.all()


def test_read_curves_rejects_uneven_grid(tmp_path):
    path = _write(tmp_path, "c.csv", "unit,t,value\na,0,1\na,1,2\nb,0,1\n")
    with pytest.raises(DataError, match="different grids"):
        read_curves(path)


def test_functional_sample_invariants():
    with pytest.raises(DataError, match="strictly increasing"):
        FunctionalSample.from_arrays([0, 0], [[1, 2]])
    with pytest.raises(DataError, match="non-finite"):
        FunctionalSample.from_arrays([0, 1], [[1, np.nan]])
    with pytest.raises(DataError, match="duplicate unit"):
        FunctionalSample.from_arrays([0], [[1], [2]], ["a", "a"])


def test_multivariate_alignment():
    s = MultivariateSample.from_arrays([[1.0], [2.0]], ["b", "a"])
    units = (UnitId(0, "a"), UnitId(1, "b"))
    np.testing.assert_array_equal(s.aligned_to(units).points[:, 0], [2.0, 1.0])
    with pytest.raises(DataError):
        s.aligned_to((UnitId(0, "a"), UnitId(1, "c")))


def test_depth_vector_range():
    with pytest.raises(ValueError):
        DepthVector([0.5, 1.2], "mbd")
    assert DepthVector([0.0, 1.0], "ed").method.value == "ed"
