import numpy as np
import pytest

from kfsd.csvio import CSVFormatError, format_curves, parse_curves
from kfsd.errors import NonFiniteValue
from kfsd.fdata import FunctionalSample, Grid


def test_roundtrip_with_header():
    s = FunctionalSample(np.random.default_rng(0).normal(size=(3, 5)), Grid.linspace(0, 2, 5))
    back, kept = parse_curves(format_curves(s))
    assert np.array_equal(back.values, s.values)
    assert np.array_equal(back.grid.points, s.grid.points)
    assert kept == [0, 1, 2]


def test_no_header_uses_index_grid():
    s, _ = parse_curves("5,1,7\n2,2,2\n")
    assert s.n == 2 and s.grid.points.tolist() == [0, 1, 2]


def test_forced_header():
    s, _ = parse_curves("0,1,2\n0,1,2\n", header=True)
    assert s.n == 1


def test_missing_cell_rejected():
    with pytest.raises(NonFiniteValue) as exc:
        parse_curves("1,2,3\n4,NA,6\n", header=False)
    assert exc.value.row == 1


def test_drop_incomplete():
    s, kept = parse_curves("1,2,3\n4,,6\n7,8,9\n", header=False, drop_incomplete=True)
    assert s.n == 2 and kept == [0, 2]


def test_bad_number_reports_position():
    with pytest.raises(CSVFormatError) as exc:
        parse_curves("1,2,3\n4,x,6\n", header=False)
    assert (exc.value.row, exc.value.column) == (2, 2)


def test_ragged_row():
    with pytest.raises(CSVFormatError):
        parse_curves("1,2,3\n4,5\n", header=False)
