import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import days, matrix
from streamfill.core import (
    AlignedDataset,
    MissingnessMask,
    SeriesMatrix,
    align,
    apply_mask,
    hidden_count,
    simulate_missingness,
    split_chronological,
)
from streamfill.errors import (
    DegenerateSplit,
    EmptyIntersection,
    ForecastGap,
    IndexOutOfRange,
)

DEFAULT_RATES = (0.05, 0.1, 0.2, 0.3, 0.5)


class TestSeriesMatrix:
    def test_nan_means_missing(self):
        sm = matrix([[1.0, np.nan], [2.0, 3.0]])
        assert sm.mask.tolist() == [[True, False], [True, True]]
        assert sm.n_observed == 3

    def test_immutable(self):
        sm = matrix([[1.0, 2.0]])
        with pytest.raises(ValueError):
            sm.values[0, 0] = 5.0

    def test_rejects_unsorted_dates(self):
        with pytest.raises(ValueError):
            SeriesMatrix(days(2)[::-1], ["A"], [[1.0], [2.0]], [[True], [True]])

    def test_rejects_duplicate_stations(self):
        with pytest.raises(ValueError):
            SeriesMatrix(days(1), ["A", "A"], [[1.0, 2.0]], [[True, True]])

    def test_rejects_nonfinite_observed(self):
        with pytest.raises(ValueError):
            SeriesMatrix(days(1), ["A"], [[np.inf]], [[True]])

    def test_gaps_in_dates_allowed(self):
        d = np.array(["2000-01-01", "2000-01-05"], dtype="datetime64[D]")
        assert SeriesMatrix(d, ["A"], [[1.0], [2.0]], [[True], [True]]).shape == (2, 1)


class TestAlign:
    def test_date_intersection(self):
        obs = matrix(np.arange(5.0), ["A"], "2000-01-01")
        fc = matrix(np.arange(7.0), ["A"], "2000-01-03")
        ds = align(obs, fc)
        assert [str(d) for d in ds.dates] == ["2000-01-03", "2000-01-04", "2000-01-05"]
        assert ds.observed.values[:, 0].tolist() == [2.0, 3.0, 4.0]
        assert ds.forecast.values[:, 0].tolist() == [0.0, 1.0, 2.0]

    def test_identity(self):
        obs = matrix(np.arange(6.0).reshape(3, 2), ["A", "B"])
        ds = align(obs, obs)
        assert ds.observed.equals(obs) and ds.forecast.equals(obs)

    def test_roster_keeps_observed_order(self):
        obs = matrix(np.ones((2, 3)), ["A", "B", "C"])
        fc = matrix(np.ones((2, 3)), ["D", "C", "B"])
        assert align(obs, fc).stations == ("B", "C")

    def test_empty_intersection(self):
        with pytest.raises(EmptyIntersection):
            align(matrix(np.ones(2), ["A"]), matrix(np.ones(2), ["B"]))
        with pytest.raises(EmptyIntersection):
            align(matrix(np.ones(2), ["A"], "2000-01-01"), matrix(np.ones(2), ["A"], "2001-01-01"))

    def test_forecast_gap_is_an_error(self):
        obs = matrix([[1.0], [2.0]], ["A"])
        fc = matrix([[1.0], [np.nan]], ["A"])
        with pytest.raises(ForecastGap):
            align(obs, fc)

    def test_idempotent(self, small_ds):
        again = align(small_ds.observed, small_ds.forecast)
        assert again.observed.equals(small_ds.observed)
        assert again.forecast.equals(small_ds.forecast)


class TestSplit:
    def _ds(self, n):
        sm = matrix(np.arange(float(n)), ["A"])
        return AlignedDataset(sm, sm)

    def test_sixty_percent_of_ten(self):
        train, test = split_chronological(self._ds(10), 0.6)
        assert len(train.dates) == 6 and len(test.dates) == 4
        assert train.observed.values[:, 0].tolist() == [0, 1, 2, 3, 4, 5]

    def test_minimal(self):
        train, test = split_chronological(self._ds(2), 0.5)
        assert len(train.dates) == 1 and len(test.dates) == 1

    def test_empty_test_half(self):
        with pytest.raises(DegenerateSplit):
            split_chronological(self._ds(2), 0.99)

    def test_odd_length_rounds_toward_training(self):
        train, _ = split_chronological(self._ds(11), 0.6)
        assert len(train.dates) == 7

    @given(st.integers(2, 400), st.floats(0.01, 0.99))
    def test_partition(self, n, f):
        ds = self._ds(n)
        try:
            train, test = split_chronological(ds, f)
        except DegenerateSplit:
            return
        assert len(train.dates) + len(test.dates) == n
        assert train.dates.max() < test.dates.min()
        assert np.array_equal(np.concatenate([train.dates, test.dates]), ds.dates)


class TestMissingness:
    def test_rate_zero(self, small_ds):
        m = simulate_missingness(small_ds.observed, 0.0, 1)
        assert len(m) == 0
        assert apply_mask(small_ds.observed, m).equals(small_ds.observed)

    def test_half_of_hundred(self):
        sm = matrix(np.ones((25, 4)))
        assert len(simulate_missingness(sm, 0.5, 3)) == 50

    def test_seed_reproducible(self):
        sm = matrix(np.ones((50, 4)))
        a = simulate_missingness(sm, 0.3, 7)
        b = simulate_missingness(sm, 0.3, 7)
        c = simulate_missingness(sm, 0.3, 8)
        assert a.as_set() == b.as_set()
        assert np.array_equal(a.cells, b.cells)
        assert a.as_set() != c.as_set()

    def test_only_observed_cells(self, rng):
        vals = rng.random((60, 5))
        vals[rng.random(vals.shape) < 0.4] = np.nan
        sm = matrix(vals)
        m = simulate_missingness(sm, 0.5, 11)
        assert sm.mask[m.cells[:, 0], m.cells[:, 1]].all()
        assert len(m) == math.floor(0.5 * sm.n_observed)

    def test_decimal_rate_counting(self):
        # 0.29 * 100 is 28.999... in binary floating point
        assert hidden_count(0.29, 100) == 29
        assert hidden_count(0.1, 10) == 1

    def test_block_mode_exact_count(self, rng):
        vals = rng.random((200, 3))
        vals[50:60, 1] = np.nan
        sm = matrix(vals)
        for rate in DEFAULT_RATES:
            m = simulate_missingness(sm, rate, 5, mode="block", block_length=20)
            assert len(m) == hidden_count(rate, sm.n_observed)
            assert len(m.as_set()) == len(m)
            assert sm.mask[m.cells[:, 0], m.cells[:, 1]].all()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 6), st.integers(0, 2**63 - 1), st.sampled_from(DEFAULT_RATES))
    def test_counts_property(self, T, S, seed, rate):
        gen = np.random.default_rng(seed % 1000)
        vals = gen.random((T, S))
        vals[gen.random((T, S)) < 0.3] = np.nan
        if not np.isfinite(vals).any():
            vals[0, 0] = 1.0
        sm = matrix(vals)
        m = simulate_missingness(sm, rate, seed)
        hidden = apply_mask(sm, m)
        assert sm.n_observed - hidden.n_observed == hidden_count(rate, sm.n_observed)
        again = simulate_missingness(matrix(vals * 3.0), rate, seed)
        assert np.array_equal(m.cells, again.cells), "mask depends only on the observed pattern"


class TestApplyMask:
    def test_hide_one_cell(self, small_ds):
        m = MissingnessMask([[0, 0]], 0.0, 0, small_ds.observed.shape)
        out = apply_mask(small_ds.observed, m)
        assert not out.mask[0, 0]
        assert out.mask.sum() == small_ds.observed.n_observed - 1
        assert small_ds.observed.mask[0, 0], "input not mutated"

    def test_hide_all(self, small_ds):
        cells = np.argwhere(small_ds.observed.mask)
        out = apply_mask(small_ds.observed, MissingnessMask(cells, 0.0, 0))
        assert out.n_observed == 0

    def test_out_of_range(self, small_ds):
        with pytest.raises(IndexOutOfRange):
            apply_mask(small_ds.observed, MissingnessMask([[1000, 0]], 0.0, 0))
