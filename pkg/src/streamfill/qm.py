"""Empirical quantile mapping, fitted per station on a training period.

The empirical CDF puts the i-th order statistic (0-based) of ``n`` samples
at probability ``(i + 0.5) / n`` and interpolates linearly in between. The
transfer function is ``F_obs^-1(F_fcst(x))``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import AlignedDataset, SeriesMatrix, fill_missing
from .errors import InsufficientSamples, InvalidConfig, UnknownStation

TAIL_POLICIES = ("clamp", "linear-extend")


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    sorted_samples: np.ndarray

    def __post_init__(self):
        x = np.sort(np.asarray(self.sorted_samples, dtype=np.float64), kind="stable")
        x.setflags(write=False)
        object.__setattr__(self, "sorted_samples", x)

    @property
    def n(self) -> int:
        return len(self.sorted_samples)

    @property
    def positions(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) / self.n

    def _knots(self):
        # collapse tie runs onto their mean plotting position so the
        # forward map is a function
        x, start, counts = np.unique(self.sorted_samples, return_index=True, return_counts=True)
        p = (start + (counts - 1) / 2.0 + 0.5) / self.n
        return x, p

    def cdf(self, x):
        """Plotting-position CDF, clamped to ``[0.5/n, 1 - 0.5/n]`` outside the samples."""
        xs, ps = self._knots()
        return np.interp(x, xs, ps)

    def quantile(self, p):
        """Inverse CDF; flat across tie plateaus, clamped at the extremes."""
        return np.interp(p, self.positions, self.sorted_samples)


def fit_cdf(samples) -> EmpiricalCdf:
    samples = np.asarray(samples, dtype=np.float64).ravel()
    samples = samples[np.isfinite(samples)]
    if samples.size < 2:
        raise InsufficientSamples(f"need at least 2 finite samples, got {samples.size}")
    return EmpiricalCdf(samples)


@dataclass(frozen=True, eq=False)
class QmModel:
    """Per-station ``(cdf_obs, cdf_fcst)`` pairs plus the tail policy."""

    cdfs: dict
    tail_policy: str = "clamp"

    def __post_init__(self):
        if self.tail_policy not in TAIL_POLICIES:
            raise InvalidConfig(f"tail_policy must be one of {TAIL_POLICIES}")

    @property
    def stations(self) -> tuple:
        return tuple(self.cdfs)

    def to_dict(self) -> dict:
        return {
            "kind": "quantile-mapping",
            "plotting_position": "(i+0.5)/n",
            "tail_policy": self.tail_policy,
            "stations": {
                s: {"obs": o.sorted_samples.tolist(), "fcst": f.sorted_samples.tolist()}
                for s, (o, f) in self.cdfs.items()
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QmModel":
        cdfs = {
            s: (EmpiricalCdf(v["obs"]), EmpiricalCdf(v["fcst"]))
            for s, v in doc["stations"].items()
        }
        return cls(cdfs, doc.get("tail_policy", "clamp"))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def fit_qm(train: AlignedDataset, tail_policy: str = "clamp") -> QmModel:
    """Fit both CDFs per station on rows where the station is observed."""
    cdfs = {}
    for j, s in enumerate(train.stations):
        rows = train.observed.mask[:, j]
        cdfs[s] = (
            fit_cdf(train.observed.values[rows, j]),
            fit_cdf(train.forecast.values[rows, j]),
        )
    return QmModel(cdfs, tail_policy)


def qm_transfer(model: QmModel, station: str, x_fcst):
    """Map forecast value(s) at ``station`` onto the observed distribution."""
    try:
        cdf_obs, cdf_fcst = model.cdfs[station]
    except KeyError:
        raise UnknownStation(station) from None
    x = np.asarray(x_fcst, dtype=np.float64)
    out = cdf_obs.quantile(cdf_fcst.cdf(x))
    if model.tail_policy == "linear-extend":
        out = _extend_tails(out, x, cdf_obs, cdf_fcst)
    return out if out.ndim else float(out)


def _extend_tails(out, x, cdf_obs, cdf_fcst):
    xs, ps = cdf_fcst._knots()
    if len(xs) < 2:
        return out
    ys = cdf_obs.quantile(ps)
    out = np.array(out, dtype=np.float64, copy=True)
    lo_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
    hi_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
    lo = x < xs[0]
    hi = x > xs[-1]
    # fitted CDF is clamped at (or inside) the knot range, so anchor at the
    # composed map's end values
    out[lo] = ys[0] + (x[lo] - xs[0]) * lo_slope
    out[hi] = ys[-1] + (x[hi] - xs[-1]) * hi_slope
    return out


def qm_impute(model: QmModel, ds: AlignedDataset) -> SeriesMatrix:
    """Fill every unobserved cell with the mapped forecast value."""
    est = np.full(ds.observed.shape, np.nan)
    for j, s in enumerate(ds.stations):
        if s not in model.cdfs:
            raise UnknownStation(s)
        miss = ~ds.observed.mask[:, j]
        if miss.any():
            est[miss, j] = qm_transfer(model, s, ds.forecast.values[miss, j])
    return fill_missing(ds.observed, est)
