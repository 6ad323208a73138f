"""Multi-station daily series, alignment, chronological splits and masking.

A :class:`SeriesMatrix` is a ``T x S`` block of discharge values with an
explicit boolean ``mask`` (True = observed). Values at unobserved cells are
stored as NaN and must never be read.

Random draws go through :func:`make_rng`, a Philox-4x64 counter-based
generator keyed by a :class:`numpy.random.SeedSequence` over integer keys.
Philox output is defined by its key and counter alone, so masks are
bit-reproducible across platforms and numpy versions that ship Philox.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateSplit,
    EmptyIntersection,
    ForecastGap,
    IndexOutOfRange,
    InvalidConfig,
)

_U64 = (1 << 64) - 1


def make_rng(*keys: int) -> np.random.Generator:
    """Philox generator keyed by any sequence of integers (taken mod 2**64)."""
    seq = np.random.SeedSequence([int(k) & _U64 for k in keys])
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(*keys: int) -> int:
    """Deterministic 63-bit child seed of ``keys``."""
    seq = np.random.SeedSequence([int(k) & _U64 for k in keys])
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _exact(fraction: float) -> Fraction:
    # decimal reading of the float, so 0.1 * 10 is exactly 1
    return Fraction(str(fraction))


def hidden_count(rate: float, eligible: int) -> int:
    """``floor(rate * eligible)`` evaluated on the decimal value of ``rate``."""
    return math.floor(_exact(rate) * eligible)


def train_count(train_fraction: float, n_dates: int) -> int:
    """``ceil(train_fraction * n_dates)`` evaluated on the decimal value."""
    return math.ceil(_exact(train_fraction) * n_dates)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SeriesMatrix:
    """Date-indexed ``T x S`` discharge matrix with an observation mask."""

    dates: np.ndarray
    stations: tuple
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        stations = tuple(str(s) for s in self.stations)
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape != (len(dates), len(stations)):
            raise ValueError(
                f"values shape {values.shape} does not match {len(dates)} dates x {len(stations)} stations"
            )
        if mask.shape != values.shape:
            raise ValueError("mask and values shapes differ")
        if len(set(stations)) != len(stations):
            raise ValueError("station identifiers must be unique")
        if len(dates) > 1 and not np.all(np.diff(dates) >= np.timedelta64(1, "D")):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(values[mask])):
            raise ValueError("observed cells must hold finite values")
        values = np.where(mask, values, np.nan)
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "stations", stations)
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "mask", _frozen(mask))

    @classmethod
    def from_array(cls, dates, stations, values) -> "SeriesMatrix":
        """Build from a value array, treating NaN as missing."""
        values = np.asarray(values, dtype=np.float64)
        return cls(dates, stations, values, np.isfinite(values))

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def n_observed(self) -> int:
        return int(self.mask.sum())

    def station_index(self, station: str) -> int:
        return self.stations.index(station)

    def replace(self, values=None, mask=None) -> "SeriesMatrix":
        return SeriesMatrix(
            self.dates,
            self.stations,
            self.values if values is None else values,
            self.mask if mask is None else mask,
        )

    def take_rows(self, rows) -> "SeriesMatrix":
        return SeriesMatrix(self.dates[rows], self.stations, self.values[rows], self.mask[rows])

    def take_stations(self, stations: Sequence[str]) -> "SeriesMatrix":
        cols = [self.station_index(s) for s in stations]
        return SeriesMatrix(self.dates, stations, self.values[:, cols], self.mask[:, cols])

    def equals(self, other: "SeriesMatrix") -> bool:
        """Cellwise equality; unobserved cells compare by mask only."""
        return (
            self.stations == other.stations
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.mask, other.mask)
            and np.array_equal(self.values[self.mask], other.values[other.mask])
        )


@dataclass(frozen=True, eq=False)
class AlignedDataset:
    """Observed and gap-free forecast matrices on one date index and roster."""

    observed: SeriesMatrix
    forecast: SeriesMatrix

    def __post_init__(self):
        if self.observed.stations != self.forecast.stations:
            raise ValueError("observed and forecast station rosters differ")
        if not np.array_equal(self.observed.dates, self.forecast.dates):
            raise ValueError("observed and forecast date indices differ")
        if not self.forecast.mask.all():
            raise ForecastGap("forecast matrix has missing cells")

    @property
    def dates(self) -> np.ndarray:
        return self.observed.dates

    @property
    def stations(self) -> tuple:
        return self.observed.stations

    def take_rows(self, rows) -> "AlignedDataset":
        return AlignedDataset(self.observed.take_rows(rows), self.forecast.take_rows(rows))

    def with_observed(self, observed: SeriesMatrix) -> "AlignedDataset":
        return AlignedDataset(observed, self.forecast)


@dataclass(frozen=True, eq=False)
class MissingnessMask:
    """Cells hidden for evaluation, as a sorted ``(k, 2)`` array of (t, s)."""

    cells: np.ndarray
    rate: float
    seed: int
    shape: tuple = field(default=(0, 0))

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "cells", _frozen(cells))

    def __len__(self) -> int:
        return len(self.cells)

    def as_set(self) -> set:
        return {(int(t), int(s)) for t, s in self.cells}

    def to_bool(self, shape=None) -> np.ndarray:
        out = np.zeros(shape or self.shape, dtype=bool)
        if len(self.cells):
            out[self.cells[:, 0], self.cells[:, 1]] = True
        return out


def align(observed: SeriesMatrix, forecast: SeriesMatrix) -> AlignedDataset:
    """Restrict both matrices to their common dates and stations.

    Stations keep the observed matrix's order. A forecast cell missing inside
    the intersection raises :class:`ForecastGap`; nothing is interpolated.
    """
    stations = [s for s in observed.stations if s in set(forecast.stations)]
    dates = np.intersect1d(observed.dates, forecast.dates)
    if not stations or len(dates) == 0:
        raise EmptyIntersection(
            f"{len(dates)} common dates, {len(stations)} common stations"
        )
    obs_rows = np.searchsorted(observed.dates, dates)
    fc_rows = np.searchsorted(forecast.dates, dates)
    obs = observed.take_rows(obs_rows).take_stations(stations)
    fc = forecast.take_rows(fc_rows).take_stations(stations)
    if not fc.mask.all():
        t, s = np.argwhere(~fc.mask)[0]
        raise ForecastGap(f"forecast missing at {fc.dates[t]} station {fc.stations[s]}")
    return AlignedDataset(obs, fc)


def split_chronological(ds: AlignedDataset, train_fraction: float):
    """First ``ceil(train_fraction * T)`` dates train, the rest test. No shuffling."""
    if not 0 < train_fraction < 1:
        raise DegenerateSplit(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n = len(ds.dates)
    n_train = train_count(train_fraction, n)
    if n_train < 1 or n_train >= n:
        raise DegenerateSplit(f"{n_train} train / {n - n_train} test dates")
    return ds.take_rows(slice(0, n_train)), ds.take_rows(slice(n_train, n))


def simulate_missingness(
    sm: SeriesMatrix, rate: float, seed: int, mode: str = "mcar", block_length: int = 30
) -> MissingnessMask:
    """Choose ``floor(rate * observed)`` observed cells to hide.

    ``mode="mcar"`` draws cells uniformly without replacement. ``mode="block"``
    hides runs of up to ``block_length`` consecutive observed days in one
    station, started at random observed cells; the last run is truncated so
    the count stays exact.
    """
    if not 0 <= rate < 1:
        raise InvalidConfig(f"rate must lie in [0, 1), got {rate}")
    eligible = np.flatnonzero(sm.mask.ravel())
    if len(eligible) == 0:
        raise InvalidConfig("matrix has no observed cells")
    k = hidden_count(rate, len(eligible))
    rng = make_rng(seed)
    if mode == "mcar":
        chosen = np.sort(rng.choice(len(eligible), size=k, replace=False))
        flat = eligible[chosen]
    elif mode == "block":
        flat = _block_cells(sm.mask, k, rng, block_length)
    else:
        raise InvalidConfig(f"unknown missingness mode {mode!r}")
    n_stations = sm.shape[1]
    cells = np.stack([flat // n_stations, flat % n_stations], axis=1)
    return MissingnessMask(cells, rate, seed, sm.shape)


def _block_cells(mask: np.ndarray, k: int, rng, block_length: int) -> np.ndarray:
    T, S = mask.shape
    hidden = np.zeros_like(mask)
    eligible = np.flatnonzero(mask.ravel())
    count = 0
    while count < k:
        start = eligible[rng.integers(len(eligible))]
        t, s = divmod(int(start), S)
        run = 0
        while t < T and run < block_length and count < k:
            if mask[t, s] and not hidden[t, s]:
                hidden[t, s] = True
                count += 1
                run += 1
            elif not mask[t, s]:
                break
            t += 1
    return np.flatnonzero(hidden.ravel())


def apply_mask(sm: SeriesMatrix, m: MissingnessMask) -> SeriesMatrix:
    """Copy of ``sm`` with the hidden cells marked unobserved."""
    if len(m.cells):
        t, s = m.cells[:, 0], m.cells[:, 1]
        if t.min() < 0 or s.min() < 0 or t.max() >= sm.shape[0] or s.max() >= sm.shape[1]:
            raise IndexOutOfRange(f"mask cell outside matrix of shape {sm.shape}")
    mask = sm.mask.copy()
    if len(m.cells):
        mask[m.cells[:, 0], m.cells[:, 1]] = False
    return sm.replace(mask=mask)


def fill_missing(sm: SeriesMatrix, estimates: np.ndarray) -> SeriesMatrix:
    """Return ``sm`` with every unobserved cell set from ``estimates``.

    The result is fully observed where ``estimates`` is finite; observed
    cells pass through bit-for-bit.
    """
    estimates = np.asarray(estimates, dtype=np.float64)
    values = np.where(sm.mask, sm.values, estimates)
    return sm.replace(values=values, mask=np.isfinite(values))
