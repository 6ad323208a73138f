"""Multi-output elastic-net bias correction.

Every station's observation is regressed on the forecast row of all
stations (``inputs="all"``) or on its own forecast only (``"colocated"``).
Inputs and outputs are z-scored on training statistics; the intercept is the
output mean and is not penalised. The penalty is parameterised as an overall
strength ``lam`` and an L1 share ``alpha``, i.e. ``l1 = lam*alpha`` and
``l2 = lam*(1-alpha)``, so the two mixing weights always sum to one.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .core import AlignedDataset, SeriesMatrix, fill_missing
from .errors import InsufficientRows, InvalidConfig, NoCompleteRows, UnknownStation
from .kernels.cd import cd_gram

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_LAMBDAS = tuple(np.logspace(-4, 2, 20))


@dataclass(frozen=True, eq=False)
class ElasticNetModel:
    """Fitted coefficients in standardised units plus the standardisation.

    Prediction is ``intercepts + out_scale * ((x - in_mean) / in_scale) @ beta``.
    """

    beta: np.ndarray
    intercepts: np.ndarray
    in_mean: np.ndarray
    in_scale: np.ndarray
    out_scale: np.ndarray
    lam: float = 0.0
    alpha: float = 1.0
    stations: tuple = ()
    converged: tuple = ()
    n_iter: tuple = ()

    @property
    def coef_(self) -> np.ndarray:
        """``S_in x S_out`` coefficients in original units."""
        return self.beta * self.out_scale[None, :] / self.in_scale[:, None]

    @property
    def intercept_(self) -> np.ndarray:
        return self.intercepts - self.in_mean @ self.coef_

    @property
    def l1(self) -> float:
        return self.lam * self.alpha

    @property
    def l2(self) -> float:
        return self.lam * (1.0 - self.alpha)

    def predict(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.in_mean) / self.in_scale
        return self.intercepts + self.out_scale * (Z @ self.beta)

    def to_dict(self) -> dict:
        return {
            "kind": "elastic-net",
            "stations": list(self.stations),
            "lambda": self.lam,
            "alpha": self.alpha,
            "l1": self.l1,
            "l2": self.l2,
            "beta_standardized": self.beta.tolist(),
            "intercepts": self.intercepts.tolist(),
            "input_mean": self.in_mean.tolist(),
            "input_scale": self.in_scale.tolist(),
            "output_scale": self.out_scale.tolist(),
            "converged": list(self.converged),
            "n_iter": list(self.n_iter),
        }

    @classmethod
    def from_dict(cls, doc) -> "ElasticNetModel":
        return cls(
            beta=np.asarray(doc["beta_standardized"], dtype=np.float64),
            intercepts=np.asarray(doc["intercepts"], dtype=np.float64),
            in_mean=np.asarray(doc["input_mean"], dtype=np.float64),
            in_scale=np.asarray(doc["input_scale"], dtype=np.float64),
            out_scale=np.asarray(doc["output_scale"], dtype=np.float64),
            lam=doc["lambda"],
            alpha=doc["alpha"],
            stations=tuple(doc["stations"]),
            converged=tuple(doc.get("converged", ())),
            n_iter=tuple(doc.get("n_iter", ())),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


@dataclass(frozen=True)
class CvSpec:
    folds: int = 5
    fold_scheme: str = "contiguous-blocks"
    alpha_grid: tuple = DEFAULT_ALPHAS
    lambda_grid: tuple = DEFAULT_LAMBDAS

    def __post_init__(self):
        if self.folds < 2:
            raise InvalidConfig("folds must be >= 2")
        if self.fold_scheme not in ("contiguous-blocks", "interleaved"):
            raise InvalidConfig(f"unknown fold_scheme {self.fold_scheme!r}")
        if not self.alpha_grid or not self.lambda_grid:
            raise InvalidConfig("alpha_grid and lambda_grid must be non-empty")
        if any(not 0 <= a <= 1 for a in self.alpha_grid):
            raise InvalidConfig("alpha values must lie in [0, 1]")
        if any(lam < 0 for lam in self.lambda_grid):
            raise InvalidConfig("lambda values must be non-negative")


def _scale(a, axis=0):
    s = np.std(a, axis=axis)
    return np.where(s > 0, s, 1.0)


@dataclass
class _Design:
    """Standardised per-output Gram systems for one set of training rows."""

    in_mean: np.ndarray
    in_scale: np.ndarray
    out_mean: np.ndarray
    out_scale: np.ndarray
    systems: list = field(default_factory=list)  # (inputs, G, c, yy) per output
    centers: list = field(default_factory=list)  # standardised input mean over each output's rows

    def intercepts(self, beta) -> np.ndarray:
        """Output intercepts for ``beta``, correcting for rows dropped per output."""
        shift = np.array([mu @ beta[:, j] for j, mu in enumerate(self.centers)])
        return self.out_mean - self.out_scale * shift


def _design(X, Y, allowed) -> _Design:
    in_mean = X.mean(axis=0)
    in_scale = _scale(X)
    Z = (X - in_mean) / in_scale
    n_out = Y.shape[1]
    out_mean = np.empty(n_out)
    out_scale = np.empty(n_out)
    systems, centers = [], []
    for j in range(n_out):
        rows = np.isfinite(Y[:, j])
        if rows.sum() < 2:
            raise NoCompleteRows(f"output {j} has {int(rows.sum())} observed training rows")
        y = Y[rows, j]
        out_mean[j] = y.mean()
        out_scale[j] = _scale(y)
        yz = (y - out_mean[j]) / out_scale[j]
        cols = allowed[j]
        mu = Z[rows].mean(axis=0)
        mu[np.setdiff1d(np.arange(Z.shape[1]), cols)] = 0.0
        Zj = Z[np.ix_(rows, cols)] - mu[cols]
        n = len(yz)
        systems.append((cols, Zj.T @ Zj / n, Zj.T @ yz / n, yz @ yz / n))
        centers.append(mu)
    return _Design(in_mean, in_scale, out_mean, out_scale, systems, centers)


def _allowed(n_in, n_out, inputs):
    if inputs == "all":
        return [np.arange(n_in)] * n_out
    if inputs == "colocated":
        if n_in != n_out:
            raise InvalidConfig("colocated inputs need one forecast column per output")
        return [np.array([j]) for j in range(n_out)]
    raise InvalidConfig(f"inputs must be 'all' or 'colocated', got {inputs!r}")


def _solve(design: _Design, n_in, lam, alpha, tol, max_iter):
    beta = np.zeros((n_in, len(design.systems)))
    converged, n_iter, hists = [], [], []
    for j, (cols, G, c, yy) in enumerate(design.systems):
        b, sweeps, hist = cd_gram(G, c, yy, float(lam), float(alpha), float(tol), int(max_iter))
        beta[cols, j] = b
        converged.append(sweeps < max_iter)
        n_iter.append(int(sweeps))
        hists.append(hist)
    return beta, converged, n_iter, hists


def fit_enet(
    X_fcst,
    X_obs,
    lam: float,
    alpha: float,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    inputs: str = "all",
    stations: tuple = (),
    return_history: bool = False,
):
    """Fit one elastic net per output column of ``X_obs`` on forecast rows ``X_fcst``.

    NaN entries of ``X_obs`` drop that row for that output only. Hitting
    ``max_iter`` logs a warning and leaves ``converged`` False for the output;
    the model is still returned.
    """
    X = np.asarray(X_fcst, dtype=np.float64)
    Y = np.asarray(X_obs, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim == 1:
        X = X[:, None]
    if tol <= 0:
        raise InvalidConfig("tol must be positive")
    if not 0 <= alpha <= 1 or lam < 0:
        raise InvalidConfig(f"invalid penalty lam={lam}, alpha={alpha}")
    if len(X) < 2:
        raise NoCompleteRows(f"{len(X)} training rows")
    design = _design(X, Y, _allowed(X.shape[1], Y.shape[1], inputs))
    beta, converged, n_iter, hists = _solve(design, X.shape[1], lam, alpha, tol, max_iter)
    if not all(converged):
        log.warning("elastic net hit max_iter=%d for outputs %s", max_iter,
                    [j for j, ok in enumerate(converged) if not ok])
    model = ElasticNetModel(
        beta=beta,
        intercepts=design.intercepts(beta),
        in_mean=design.in_mean,
        in_scale=design.in_scale,
        out_scale=design.out_scale,
        lam=float(lam),
        alpha=float(alpha),
        stations=tuple(stations),
        converged=tuple(converged),
        n_iter=tuple(n_iter),
    )
    return (model, hists) if return_history else model


def _folds(n, spec: CvSpec):
    if spec.fold_scheme == "contiguous-blocks":
        return np.array_split(np.arange(n), spec.folds)
    return [np.arange(k, n, spec.folds) for k in range(spec.folds)]


def cv_scores(X_fcst, X_obs, spec: CvSpec = CvSpec(), tol=1e-6, max_iter=10_000, inputs="all"):
    """Mean held-out RMSE (standardised target units) at every grid point.

    Returns ``{(lam, alpha): score}``.
    """
    X = np.asarray(X_fcst, dtype=np.float64)
    Y = np.asarray(X_obs, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.ndim == 1:
        X = X[:, None]
    n = len(X)
    if n < 2 * spec.folds:
        raise InsufficientRows(f"{n} rows is too few for {spec.folds} folds")
    target_scale = np.array([_scale(Y[np.isfinite(Y[:, j]), j]) for j in range(Y.shape[1])])
    allowed = _allowed(X.shape[1], Y.shape[1], inputs)
    folds = []
    for held in _folds(n, spec):
        keep = np.ones(n, dtype=bool)
        keep[held] = False
        folds.append((_design(X[keep], Y[keep], allowed), held))
    scores = {}
    for lam in spec.lambda_grid:
        for alpha in spec.alpha_grid:
            per_fold = []
            for design, held in folds:
                beta, *_ = _solve(design, X.shape[1], lam, alpha, tol, max_iter)
                pred = design.intercepts(beta) + design.out_scale * (
                    ((X[held] - design.in_mean) / design.in_scale) @ beta
                )
                resid = (pred - Y[held]) / target_scale
                resid = resid[np.isfinite(resid)]
                per_fold.append(np.sqrt(np.mean(resid**2)) if resid.size else np.nan)
            scores[(float(lam), float(alpha))] = float(np.nanmean(per_fold))
    return scores


def select_from_scores(scores: dict):
    """Grid pair with the lowest score; ties go to the larger ``lam``."""
    best = min(scores.values())
    tied = [k for k, v in scores.items() if v <= best + 1e-12 * abs(best)]
    top_lam = max(k[0] for k in tied)
    return next(k for k in tied if k[0] == top_lam)


def cross_validate_enet(X_fcst, X_obs, spec: CvSpec = CvSpec(), **kwargs):
    """Return the ``(lam, alpha)`` grid pair minimising mean held-out RMSE."""
    return select_from_scores(cv_scores(X_fcst, X_obs, spec, **kwargs))


def fit_enet_cv(train: AlignedDataset, spec: CvSpec = CvSpec(), tol=1e-6,
                max_iter=10_000, inputs="all") -> ElasticNetModel:
    """Cross-validate on ``train`` then refit on all of it."""
    X = train.forecast.values
    Y = train.observed.values
    lam, alpha = cross_validate_enet(X, Y, spec, tol=tol, max_iter=max_iter, inputs=inputs)
    log.info("elastic net CV picked lambda=%.4g alpha=%.2f (l1=%.4g, l2=%.4g)",
             lam, alpha, lam * alpha, lam * (1 - alpha))
    return fit_enet(X, Y, lam, alpha, tol, max_iter, inputs, stations=train.stations)


def enet_impute(model: ElasticNetModel, ds: AlignedDataset) -> SeriesMatrix:
    """Fill unobserved cells with the model's prediction from the forecast row."""
    if model.stations and tuple(model.stations) != tuple(ds.stations):
        missing = set(ds.stations) - set(model.stations)
        raise UnknownStation(", ".join(sorted(missing)) or "station order differs")
    if model.beta.shape != (len(ds.stations), len(ds.stations)):
        raise UnknownStation(f"model has shape {model.beta.shape} for {len(ds.stations)} stations")
    return fill_missing(ds.observed, model.predict(ds.forecast.values))
