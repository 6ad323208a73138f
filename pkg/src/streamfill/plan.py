"""Experiment plans and their TOML form.

::

    [plan]
    methods = ["gess-lookup", "qm", "enet", "gp", "knn", "rf"]
    rates = [0.05, 0.1, 0.2, 0.3, 0.5]
    seeds = [0, 1, 2]
    train_fraction = 0.6
    fit_seed = 0                 # seeds GP subsampling/restarts and RF bagging
    missingness = "mcar"         # or "block"
    block_length = 30

    [qm]
    tail_policy = "clamp"        # or "linear-extend"

    [enet]
    folds = 5
    fold_scheme = "contiguous-blocks"   # or "interleaved"
    alpha_grid = [0.0, 0.25, 0.5, 0.75, 1.0]
    lambda_min = 1e-4
    lambda_max = 1e2
    n_lambda = 20                # or give lambda_grid = [...] explicitly
    tol = 1e-6
    max_iter = 10000
    inputs = "all"               # or "colocated"

    [gp]
    budget = 2000
    restarts = 3

    [knn]
    k = 5

    [rf]
    n_trees = 100
    max_depth = 12
    min_samples_leaf = 5
    feature_subsample = 0.3333333333333333

    [report]
    table2_rate = 0.2
    plot_window = 365

    [synth]                      # read by `streamfill synth`; SynthConfig fields
    n_stations = 10
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .baselines import ForestConfig
from .enet import CvSpec
from .errors import InvalidConfig
from .synthdata import SynthConfig

METHODS = ("gess-lookup", "qm", "enet", "gp", "knn", "rf")
DEFAULT_RATES = (0.05, 0.1, 0.2, 0.3, 0.5)


@dataclass(frozen=True)
class QmSettings:
    tail_policy: str = "clamp"


@dataclass(frozen=True)
class EnetSettings:
    folds: int = 5
    fold_scheme: str = "contiguous-blocks"
    alpha_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    lambda_min: float = 1e-4
    lambda_max: float = 1e2
    n_lambda: int = 20
    lambda_grid: tuple = ()
    tol: float = 1e-6
    max_iter: int = 10_000
    inputs: str = "all"

    def cv_spec(self) -> CvSpec:
        grid = self.lambda_grid or tuple(
            float(v) for v in np.logspace(np.log10(self.lambda_min), np.log10(self.lambda_max), self.n_lambda)
        )
        return CvSpec(self.folds, self.fold_scheme, tuple(self.alpha_grid), tuple(grid))


@dataclass(frozen=True)
class GpSettings:
    budget: int = 2000
    restarts: int = 3


@dataclass(frozen=True)
class KnnSettings:
    k: int = 5


@dataclass(frozen=True)
class ReportSettings:
    table2_rate: float = 0.2
    plot_window: int = 365


@dataclass(frozen=True)
class ExperimentPlan:
    methods: tuple = METHODS
    rates: tuple = DEFAULT_RATES
    seeds: tuple = (0, 1, 2)
    train_fraction: float = 0.6
    fit_seed: int = 0
    missingness: str = "mcar"
    block_length: int = 30
    qm: QmSettings = field(default_factory=QmSettings)
    enet: EnetSettings = field(default_factory=EnetSettings)
    gp: GpSettings = field(default_factory=GpSettings)
    knn: KnnSettings = field(default_factory=KnnSettings)
    rf: ForestConfig = field(default_factory=ForestConfig)
    report: ReportSettings = field(default_factory=ReportSettings)
    synth: SynthConfig | None = None

    def __post_init__(self):
        if not self.methods or not self.rates or not self.seeds:
            raise InvalidConfig("methods, rates and seeds must be non-empty")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise InvalidConfig(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if any(not 0 <= r < 1 for r in self.rates):
            raise InvalidConfig("rates must lie in [0, 1)")
        if not 0 < self.train_fraction < 1:
            raise InvalidConfig("train_fraction must lie in (0, 1)")
        if self.missingness not in ("mcar", "block"):
            raise InvalidConfig("missingness must be 'mcar' or 'block'")
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    def with_seed(self, seed: int) -> "ExperimentPlan":
        return replace(self, seeds=(int(seed),), fit_seed=int(seed))

    def to_dict(self) -> dict:
        doc = asdict(self)
        if self.synth is not None:
            doc["synth"] = self.synth.to_dict()
        return doc

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), default=list)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


_SECTIONS = {
    "qm": QmSettings,
    "enet": EnetSettings,
    "gp": GpSettings,
    "knn": KnnSettings,
    "rf": ForestConfig,
    "report": ReportSettings,
}


def _build(cls, doc, section):
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise InvalidConfig(f"[{section}] unknown keys: {sorted(unknown)}")
    doc = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()}
    return cls(**doc)


def plan_from_dict(doc: dict) -> ExperimentPlan:
    doc = dict(doc)
    top = dict(doc.pop("plan", {}))
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in top.items()}
    known = {f.name for f in fields(ExperimentPlan)} - set(_SECTIONS) - {"synth"}
    unknown = set(kwargs) - known
    if unknown:
        raise InvalidConfig(f"[plan] unknown keys: {sorted(unknown)}")
    for name, cls in _SECTIONS.items():
        if name in doc:
            kwargs[name] = _build(cls, doc.pop(name), name)
    if "synth" in doc:
        kwargs["synth"] = SynthConfig.from_dict(doc.pop("synth"))
    if doc:
        raise InvalidConfig(f"unknown sections: {sorted(doc)}")
    return ExperimentPlan(**kwargs)


def load_plan(path) -> ExperimentPlan:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise InvalidConfig(f"{path}: {exc}") from None
    return plan_from_dict(doc)
