"""Seeded generator of coupled multi-station daily discharge.

Truth per station is ``base + amplitude*sin(2*pi*t/period + phase) + anomaly``
clipped at zero, where the anomaly is a unit-variance AR(1) process scaled by
``anomaly_sd``. AR innovations share a common factor so that every pair of
stations has innovation correlation ``cross_corr`` (and, since all stations
use the same AR coefficient, the same anomaly correlation).

The forecast is derived from the truth: a monotone bias shape, then additive
Gaussian noise, then clipping at zero.

    affine          a*x + b
    power           a*x**exponent + b
    quantile-warp   a*x + b + warp*sd*tanh((x - mean)/sd)   (truth mean/sd)
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy.signal import lfilter

from .core import AlignedDataset, SeriesMatrix, make_rng
from .errors import InvalidConfig

BIAS_SHAPES = ("affine", "power", "quantile-warp")

_PER_STATION = (
    "seasonal_amplitude", "seasonal_phase", "base_flow", "anomaly_sd",
    "bias_gain", "bias_offset", "bias_exponent", "warp", "noise_sd",
)


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings. Per-station fields take a scalar or one value per station."""

    n_stations: int = 10
    n_days: int = 15 * 365
    start_date: str = "1990-01-01"
    seasonal_period: float = 365.0
    seasonal_amplitude: object = 80.0
    seasonal_phase: object = 0.0
    base_flow: object = 100.0
    anomaly_sd: object = 30.0
    ar_coef: float = 0.7
    cross_corr: float = 0.6
    bias_shape: str = "affine"
    bias_gain: object = 1.0
    bias_offset: object = 0.0
    bias_exponent: object = 1.0
    warp: object = 0.0
    noise_sd: object = 0.0
    noise_relative: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_stations < 1 or self.n_days < 2:
            raise InvalidConfig("need at least one station and two days")
        if not 0 <= self.cross_corr < 1:
            raise InvalidConfig("cross_corr must lie in [0, 1)")
        if not -1 < self.ar_coef < 1:
            raise InvalidConfig("ar_coef must lie in (-1, 1)")
        if self.bias_shape not in BIAS_SHAPES:
            raise InvalidConfig(f"bias_shape must be one of {BIAS_SHAPES}")
        if self.seasonal_period <= 0:
            raise InvalidConfig("seasonal_period must be positive")
        for name in _PER_STATION:
            self.per_station(name)
        if np.any(self.per_station("base_flow") < 0) or np.any(self.per_station("noise_sd") < 0):
            raise InvalidConfig("base_flow and noise_sd must be non-negative")
        if self.bias_shape == "quantile-warp" and np.any(
            self.per_station("bias_gain") - np.abs(self.per_station("warp")) <= 0
        ):
            raise InvalidConfig("quantile-warp needs bias_gain > |warp| to stay increasing")
        if self.bias_shape != "quantile-warp" and np.any(self.per_station("bias_gain") <= 0):
            raise InvalidConfig("bias_gain must be positive for a monotone bias")

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise InvalidConfig(f"unknown synth keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in asdict(self).items()}

    def per_station(self, name: str) -> np.ndarray:
        v = np.asarray(getattr(self, name), dtype=np.float64)
        if v.ndim == 0:
            return np.full(self.n_stations, float(v))
        if v.shape != (self.n_stations,):
            raise InvalidConfig(f"{name} needs {self.n_stations} values, got {v.size}")
        return v

    @property
    def stations(self) -> tuple:
        width = max(2, len(str(self.n_stations)))
        return tuple(f"S{i + 1:0{width}d}" for i in range(self.n_stations))


def seasonal_component(cfg: SynthConfig) -> np.ndarray:
    """``T x S`` deterministic part: base flow plus the seasonal sinusoid."""
    t = np.arange(cfg.n_days, dtype=np.float64)[:, None]
    phase = 2.0 * np.pi * t / cfg.seasonal_period + cfg.per_station("seasonal_phase")
    return cfg.per_station("base_flow") + cfg.per_station("seasonal_amplitude") * np.sin(phase)


def _anomalies(cfg: SynthConfig, rng) -> np.ndarray:
    T, S = cfg.n_days, cfg.n_stations
    common = rng.standard_normal((T, 1))
    own = rng.standard_normal((T, S))
    e = np.sqrt(cfg.cross_corr) * common + np.sqrt(1.0 - cfg.cross_corr) * own
    phi = cfg.ar_coef
    gain = np.sqrt(1.0 - phi * phi)
    # start in the stationary distribution: a[0] = e[0]
    zi = (phi * e[0])[None, :]
    a = np.empty_like(e)
    a[0] = e[0]
    a[1:] = lfilter([gain], [1.0, -phi], e[1:], axis=0, zi=zi)[0]
    return a * cfg.per_station("anomaly_sd")


def apply_bias(cfg: SynthConfig, truth: np.ndarray) -> np.ndarray:
    """Noise-free forecast: the configured bias shape applied to ``truth``."""
    a = cfg.per_station("bias_gain")
    b = cfg.per_station("bias_offset")
    if cfg.bias_shape == "affine":
        return a * truth + b
    if cfg.bias_shape == "power":
        return a * np.power(truth, cfg.per_station("bias_exponent")) + b
    mu = truth.mean(axis=0)
    sd = truth.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return a * truth + b + cfg.per_station("warp") * sd * np.tanh((truth - mu) / sd)


def generate(cfg: SynthConfig):
    """Return ``(AlignedDataset, ground_bias)`` for ``cfg``.

    ``ground_bias`` maps each station to its bias parameters and the noise
    standard deviation actually applied.
    """
    rng = make_rng(cfg.seed, 0x5EED)
    truth = np.maximum(seasonal_component(cfg) + _anomalies(cfg, rng), 0.0)
    noise_sd = cfg.per_station("noise_sd")
    if cfg.noise_relative:
        noise_sd = noise_sd * truth.std(axis=0)
    noise = rng.standard_normal(truth.shape) * noise_sd
    forecast = np.maximum(apply_bias(cfg, truth) + noise, 0.0)
    dates = np.datetime64(cfg.start_date, "D") + np.arange(cfg.n_days)
    stations = cfg.stations
    ds = AlignedDataset(
        SeriesMatrix.from_array(dates, stations, truth),
        SeriesMatrix.from_array(dates, stations, forecast),
    )
    bias = {
        s: {
            "shape": cfg.bias_shape,
            "gain": float(cfg.per_station("bias_gain")[j]),
            "offset": float(cfg.per_station("bias_offset")[j]),
            "exponent": float(cfg.per_station("bias_exponent")[j]),
            "warp": float(cfg.per_station("warp")[j]),
            "noise_sd": float(noise_sd[j]),
        }
        for j, s in enumerate(stations)
    }
    return ds, bias
