import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import matrix
from streamfill.errors import NonMonotoneDates, ParseError
from streamfill.io import format_series_csv, parse_series_csv, read_series_csv, write_series_csv


def parse(text):
    return parse_series_csv(io.StringIO(text))


def test_schema_example():
    sm = parse("date,A,B\n2020-01-01,1.5,\n")
    assert sm.stations == ("A", "B")
    assert sm.mask.tolist() == [[True, False]]
    assert sm.values[0, 0] == 1.5


def test_duplicate_dates():
    with pytest.raises(NonMonotoneDates):
        parse("date,A\n2020-01-01,1\n2020-01-01,2\n")


def test_decreasing_dates():
    with pytest.raises(NonMonotoneDates):
        parse("date,A\n2020-01-02,1\n2020-01-01,2\n")


@pytest.mark.parametrize("text, line, col", [
    ("date,A\n2020-01-01,abc\n", 2, 2),
    ("date,A\n2020-13-01,1\n", 2, 1),
    ("date,A\n2020-01-01,1,2\n", 2, 3),
    ("day,A\n2020-01-01,1\n", 1, 1),
    ("date,A,A\n", 1, 3),
    ("date,A\n2020-01-01,1\n2020-01-02,nan\n", 3, 2),
])
def test_parse_errors_are_located(text, line, col):
    with pytest.raises(ParseError) as err:
        parse(text)
    assert (err.value.line, err.value.column) == (line, col)


def test_empty_file():
    with pytest.raises(ParseError):
        parse("")


def test_file_round_trip(tmp_path):
    sm = matrix([[1.0, np.nan], [0.1 + 0.2, 1e-300]], ["x", "y"])
    path = write_series_csv(sm, tmp_path / "sub" / "s.csv")
    assert read_series_csv(path).equals(sm)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.integers(1, 5)),
              elements=st.one_of(st.just(np.nan), st.floats(-1e12, 1e12))))
def test_round_trip_property(values):
    sm = matrix(values)
    assert parse(format_series_csv(sm)).equals(sm)
