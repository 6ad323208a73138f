"""Experiment orchestration: methods x missingness rates x seeds.

Every method is fitted once on the training split. For each (rate, seed)
one mask is drawn over the observed test cells and shared by all methods,
so comparisons are paired. Bias-correction methods get the degraded test
observations plus the forecast; the baselines get the degraded observations
only.
"""
from __future__ import annotations

import logging
import os
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, _accel
from .baselines import fit_forest, forest_impute, gess_lookup, knn_impute
from .core import (
    AlignedDataset,
    apply_mask,
    derive_seed,
    simulate_missingness,
    split_chronological,
)
from .enet import enet_impute, fit_enet_cv
from .gp import fit_gp, gp_impute
from .metrics import MetricsReport, score_imputation
from .plan import ExperimentPlan
from .qm import fit_qm, qm_impute

log = logging.getLogger(__name__)

BIAS_CORRECTION = ("gess-lookup", "qm", "enet", "gp")


def worker_count() -> int:
    raw = os.environ.get("STREAMFILL_THREADS", "0").strip() or "0"
    n = int(raw)
    return n if n > 0 else (os.cpu_count() or 1)


def fit_method(method: str, train: AlignedDataset, plan: ExperimentPlan, seed: int | None = None):
    """Fit ``method`` on ``train``; returns an object for :func:`impute_with`."""
    seed = plan.fit_seed if seed is None else seed
    if method == "gess-lookup":
        return None
    if method == "qm":
        return fit_qm(train, plan.qm.tail_policy)
    if method == "enet":
        e = plan.enet
        return fit_enet_cv(train, e.cv_spec(), e.tol, e.max_iter, e.inputs)
    if method == "gp":
        return fit_gp(train, plan.gp.budget, plan.gp.restarts, seed)
    if method == "knn":
        # lazy: KNN keeps the training observations and searches at imputation time
        return train.observed
    if method == "rf":
        return fit_forest(train.observed, plan.rf, seed)
    raise ValueError(f"unknown method {method!r}")


def impute_with(method: str, model, ds: AlignedDataset, plan: ExperimentPlan):
    if method == "gess-lookup":
        return gess_lookup(ds)
    if method == "qm":
        return qm_impute(model, ds)
    if method == "enet":
        return enet_impute(model, ds)
    if method == "gp":
        return gp_impute(model, ds)
    # baselines: in-situ only
    if method == "knn":
        return knn_impute(model, ds.observed, plan.knn.k)
    if method == "rf":
        return forest_impute(model, ds.observed)
    raise ValueError(f"unknown method {method!r}")


def model_summary(method: str, model) -> dict:
    if model is None:
        return {"kind": method}
    if hasattr(model, "to_dict"):
        return model.to_dict()
    if hasattr(model, "summary"):
        return model.summary()
    if method == "knn":
        return {"kind": "knn", "training_rows": int(model.mask.all(axis=1).sum())}
    if method == "rf":
        sizes = [t.n_nodes for bag in model.trees.values() for t in bag]
        return {
            "kind": "random-forest",
            "config": vars(model.config),
            "seed": model.seed,
            "trees": len(sizes),
            "mean_nodes": float(np.mean(sizes)),
        }
    return {"kind": method}


@dataclass
class ExperimentRun:
    """A finished run: the metrics plus what the report writer needs."""

    report: MetricsReport
    plan: ExperimentPlan
    test: AlignedDataset
    models: dict = field(default_factory=dict)
    masks: dict = field(default_factory=dict)
    snapshot: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)


def _mask_seed(seed: int, rate_index: int) -> int:
    return derive_seed(seed, rate_index)


def run_experiment(ds: AlignedDataset, plan: ExperimentPlan, snapshot_rate: float | None = None) -> ExperimentRun:
    """Run the full grid and score every method at the masked cells.

    Identical ``ds`` and ``plan`` give an identical report regardless of
    ``STREAMFILL_THREADS``. A method whose fit or imputation raises is
    logged in ``report.failures`` and the sweep carries on.
    """
    train, test = split_chronological(ds, plan.train_fraction)
    workers = worker_count()
    report = MetricsReport()

    def fit_one(method):
        try:
            return method, fit_method(method, train, plan), None
        except Exception as exc:  # noqa: BLE001 - recorded, sweep continues
            log.exception("fit of %s failed", method)
            return method, None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=workers) as pool:
        fitted = list(pool.map(fit_one, plan.methods))
    models = {m: model for m, model, err in fitted if err is None}
    fit_errors = {m: err for m, _, err in fitted if err is not None}

    cells = [(ri, rate, si, seed) for ri, rate in enumerate(plan.rates) for si, seed in enumerate(plan.seeds)]
    snapshot_rate = plan.report.table2_rate if snapshot_rate is None else snapshot_rate
    snap_key = (min(plan.rates, key=lambda r: abs(r - snapshot_rate)), plan.seeds[0])

    def run_cell(cell):
        ri, rate, si, seed = cell
        mseed = _mask_seed(seed, ri)
        mask = simulate_missingness(test.observed, rate, mseed, plan.missingness, plan.block_length)
        degraded = test.with_observed(apply_mask(test.observed, mask))
        out = {"mask": mask, "mask_seed": mseed, "scores": {}, "errors": {}, "imputed": {}}
        for method in plan.methods:
            if method in fit_errors:
                out["errors"][method] = fit_errors[method]
                continue
            try:
                imputed = impute_with(method, models[method], degraded, plan)
                out["scores"][method] = score_imputation(test.observed, imputed, mask)
                if (rate, seed) == snap_key:
                    out["imputed"][method] = imputed
            except Exception as exc:  # noqa: BLE001
                log.exception("%s failed at rate=%g seed=%d", method, rate, seed)
                out["errors"][method] = f"{type(exc).__name__}: {exc}"
        return out

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run_cell, cells))

    masks, snapshot = {}, {}
    for method in plan.methods:
        for (ri, rate, si, seed), res in zip(cells, results):
            if method in res["scores"]:
                report.add(method, rate, seed, res["scores"][method])
            elif method in res["errors"]:
                report.failures.append((method, rate, seed, "*", res["errors"][method]))
    for (ri, rate, si, seed), res in zip(cells, results):
        masks[(rate, seed)] = (res["mask"], res["mask_seed"])
        if res["imputed"]:
            snapshot = {"rate": rate, "seed": seed, "mask": res["mask"], "imputed": res["imputed"]}

    manifest = {
        "streamfill_version": __version__,
        "config_hash": plan.config_hash(),
        "plan": plan.to_dict(),
        "numba": _accel.USE_NUMBA,
        "versions": _versions(),
        "train_dates": [str(train.dates[0]), str(train.dates[-1]), len(train.dates)],
        "test_dates": [str(test.dates[0]), str(test.dates[-1]), len(test.dates)],
        "stations": list(ds.stations),
        "mask_seeds": [
            {"rate": rate, "seed": seed, "mask_seed": ms, "hidden": len(m)}
            for (rate, seed), (m, ms) in masks.items()
        ],
        "models": {m: model_summary(m, models[m]) for m in plan.methods if m in models},
        "failures": [list(f) for f in report.failures],
        "skipped": [list(s) for s in report.skipped],
    }
    return ExperimentRun(report, plan, test, models, masks, snapshot, manifest)


def _versions() -> dict:
    import scipy

    out = {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}
    if _accel.HAS_NUMBA:
        out["numba"] = _accel.numba.__version__
    return out
