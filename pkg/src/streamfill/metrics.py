"""Skill scores for imputed discharge: KGE, NSE and RMSE.

All spreads are population standard deviations (divisor ``n``). KGE uses the
usual squared correlation term::

    KGE = 1 - sqrt((r - 1)**2 + (mean_sim/mean_obs - 1)**2 + (std_sim/std_obs - 1)**2)
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import MissingnessMask, SeriesMatrix
from .errors import DegenerateMean, DegenerateVariance, UnimputedCell


class ScoreTriple(NamedTuple):
    kge: float
    nse: float
    rmse: float


def _pair(obs, sim, min_len):
    obs = np.asarray(obs, dtype=np.float64).ravel()
    sim = np.asarray(sim, dtype=np.float64).ravel()
    if obs.shape != sim.shape:
        raise ValueError(f"length mismatch: {obs.size} observed vs {sim.size} simulated")
    if obs.size < min_len:
        raise ValueError(f"need at least {min_len} pairs, got {obs.size}")
    return obs, sim


def kge(obs, sim) -> float:
    """Kling-Gupta efficiency of ``sim`` against ``obs``.

    Raises:
        DegenerateVariance: either series is constant, so ``r`` is undefined.
        DegenerateMean: ``mean(obs) == 0``.
    """
    obs, sim = _pair(obs, sim, 2)
    mu_o, mu_s = obs.mean(), sim.mean()
    do, ds = obs - mu_o, sim - mu_s
    sd_o = np.sqrt(np.mean(do * do))
    sd_s = np.sqrt(np.mean(ds * ds))
    if sd_o == 0 or sd_s == 0:
        raise DegenerateVariance("constant series: correlation undefined")
    if mu_o == 0:
        raise DegenerateMean("mean of observations is zero")
    r = np.mean(do * ds) / (sd_o * sd_s)
    beta = mu_s / mu_o
    alpha = sd_s / sd_o
    return float(1.0 - np.sqrt((r - 1.0) ** 2 + (beta - 1.0) ** 2 + (alpha - 1.0) ** 2))


def nse(obs, sim) -> float:
    """Nash-Sutcliffe efficiency; 1 is perfect, 0 matches the observed mean."""
    obs, sim = _pair(obs, sim, 2)
    dev = obs - obs.mean()
    denom = np.dot(dev, dev)
    if denom == 0:
        raise DegenerateVariance("constant observations")
    err = obs - sim
    return float(1.0 - np.dot(err, err) / denom)


def rmse(obs, sim) -> float:
    obs, sim = _pair(obs, sim, 1)
    err = obs - sim
    return float(np.sqrt(np.mean(err * err)))


def score(obs, sim) -> ScoreTriple:
    return ScoreTriple(kge(obs, sim), nse(obs, sim), rmse(obs, sim))


@dataclass(frozen=True)
class StationScore:
    """Scores for one station, or the reason it was not scored."""

    station: str
    scores: ScoreTriple | None
    skipped: str | None = None
    n_cells: int = 0


def score_imputation(
    truth: SeriesMatrix, imputed: SeriesMatrix, m: MissingnessMask, per_station: bool = True
) -> list[StationScore]:
    """Score ``imputed`` against ``truth`` at the hidden cells of ``m`` only.

    With ``per_station=False`` all hidden cells are pooled into a single
    entry named ``"*"``. Groups with fewer than two cells, or whose scores
    are undefined (constant truth, zero mean), come back skipped.
    """
    cells = m.cells
    if len(cells):
        t, s = cells[:, 0], cells[:, 1]
        if not truth.mask[t, s].all():
            raise UnimputedCell("truth is unobserved at a masked cell")
        if not imputed.mask[t, s].all():
            bad = cells[~imputed.mask[t, s]][0]
            raise UnimputedCell(f"no imputed value at cell {tuple(int(v) for v in bad)}")
    groups = (
        [(name, cells[cells[:, 1] == j]) for j, name in enumerate(truth.stations)]
        if per_station
        else [("*", cells)]
    )
    out = []
    for name, sub in groups:
        n = len(sub)
        if n < 2:
            out.append(StationScore(name, None, f"{n} masked cells", n))
            continue
        o = truth.values[sub[:, 0], sub[:, 1]]
        x = imputed.values[sub[:, 0], sub[:, 1]]
        try:
            out.append(StationScore(name, score(o, x), None, n))
        except (DegenerateVariance, DegenerateMean) as exc:
            out.append(StationScore(name, None, str(exc), n))
    return out


class Record(NamedTuple):
    method: str
    rate: float
    seed: int
    station: str
    scores: ScoreTriple


@dataclass
class MetricsReport:
    """Per-(method, rate, seed, station) records and their aggregates.

    Aggregates are unweighted means over stations within each seed, then
    over seeds. ``skipped`` and ``failures`` hold the cells that produced
    no record.
    """

    records: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def add(self, method, rate, seed, results):
        for r in results:
            if r.scores is None:
                self.skipped.append((method, rate, seed, r.station, r.skipped))
            else:
                self.records.append(Record(method, rate, seed, r.station, r.scores))

    @property
    def methods(self) -> list:
        return list(dict.fromkeys(r.method for r in self.records))

    @property
    def rates(self) -> list:
        return sorted({r.rate for r in self.records})

    @property
    def stations(self) -> list:
        return list(dict.fromkeys(r.station for r in self.records))

    @property
    def aggregates(self) -> dict:
        """``{(method, rate): ScoreTriple}`` of station-then-seed means."""
        by_seed = defaultdict(list)
        for r in self.records:
            by_seed[(r.method, r.rate, r.seed)].append(r.scores)
        per_cell = defaultdict(list)
        for (method, rate, _seed), triples in by_seed.items():
            per_cell[(method, rate)].append(np.mean(np.asarray(triples), axis=0))
        return {
            key: ScoreTriple(*map(float, np.mean(np.asarray(v), axis=0)))
            for key, v in per_cell.items()
        }

    def station_means(self, rate: float) -> dict:
        """``{(method, station): ScoreTriple}`` averaged over seeds at ``rate``."""
        acc = defaultdict(list)
        for r in self.records:
            if r.rate == rate:
                acc[(r.method, r.station)].append(r.scores)
        return {
            key: ScoreTriple(*map(float, np.mean(np.asarray(v), axis=0)))
            for key, v in acc.items()
        }
