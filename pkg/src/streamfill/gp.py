"""Multi-output Gaussian process bias correction.

All outputs share one squared-exponential kernel over the standardised
forecast row and one noise variance; the log marginal likelihood is summed
over outputs. Targets are z-scored per station before fitting so a single
signal and noise variance is meaningful across stations of very different
size; predictions are mapped back to discharge units.

Hyperparameters are optimised in log space with L-BFGS-B on the analytic
gradient.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import cdist

from .core import AlignedDataset, SeriesMatrix, fill_missing, make_rng
from .errors import CholeskyFailure, DimensionMismatch, NoCompleteRows, UnknownStation

log = logging.getLogger(__name__)

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True)
class GpHyperparams:
    lengthscale: float
    signal_variance: float
    noise_variance: float
    prior_mean: tuple = (0.0,)

    def __post_init__(self):
        for name in ("lengthscale", "signal_variance", "noise_variance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "prior_mean", tuple(float(m) for m in np.atleast_1d(self.prior_mean)))

    @property
    def log_params(self) -> np.ndarray:
        return np.log([self.lengthscale, self.signal_variance, self.noise_variance])

    def with_log_params(self, theta) -> "GpHyperparams":
        ell, sf2, sn2 = np.exp(np.asarray(theta, dtype=np.float64))
        return replace(self, lengthscale=float(ell), signal_variance=float(sf2), noise_variance=float(sn2))


def se_kernel(xi, xj, hyper: GpHyperparams) -> float:
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    xj = np.atleast_1d(np.asarray(xj, dtype=np.float64))
    if xi.shape != xj.shape:
        raise DimensionMismatch(f"{xi.shape} vs {xj.shape}")
    d2 = float(np.sum((xi - xj) ** 2))
    return hyper.signal_variance * float(np.exp(-d2 / (2.0 * hyper.lengthscale**2)))


def _sqdist(A, B):
    return cdist(A, B, "sqeuclidean")


def kernel_matrix(A, B, hyper: GpHyperparams) -> np.ndarray:
    return hyper.signal_variance * np.exp(-_sqdist(A, B) / (2.0 * hyper.lengthscale**2))


def cholesky_jitter(A: np.ndarray) -> tuple:
    """Lower Cholesky factor of ``A``, adding diagonal jitter if needed.

    Jitter starts at ``1e-10 * mean(diag)`` and grows tenfold up to
    ``1e-4 * mean(diag)``. Returns ``(L, jitter)``.
    """
    try:
        return linalg.cholesky(A, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(A)))
    jitter = 1e-10 * scale
    n = len(A)
    while jitter <= 1e-4 * scale * (1 + 1e-9):
        try:
            L = linalg.cholesky(A + jitter * np.eye(n), lower=True, check_finite=False)
            log.warning("Cholesky needed jitter %.3g", jitter)
            return L, jitter
        except linalg.LinAlgError:
            jitter *= 10.0
    raise CholeskyFailure(f"matrix not positive definite after jitter up to {1e-4 * scale:.3g}")


def _as_2d(a):
    a = np.asarray(a, dtype=np.float64)
    return a[:, None] if a.ndim == 1 else a


def log_marginal_likelihood(hyper: GpHyperparams, inputs, targets):
    """Summed log marginal likelihood over target columns and its gradient.

    The gradient is with respect to ``(log lengthscale, log signal_variance,
    log noise_variance)``.
    """
    X = _as_2d(inputs)
    Y = _as_2d(targets)
    n, m = Y.shape
    if len(X) != n:
        raise DimensionMismatch(f"{len(X)} input rows vs {n} target rows")
    D = _sqdist(X, X)
    K = hyper.signal_variance * np.exp(-D / (2.0 * hyper.lengthscale**2))
    A = K + hyper.noise_variance * np.eye(n)
    L, _ = cholesky_jitter(A)
    R = Y - np.asarray(hyper.prior_mean)
    alpha = linalg.cho_solve((L, True), R, check_finite=False)
    value = -0.5 * np.sum(R * alpha) - m * np.sum(np.log(np.diag(L))) - 0.5 * n * m * _LOG_2PI
    W = alpha @ alpha.T - m * linalg.cho_solve((L, True), np.eye(n), check_finite=False)
    grad = np.array([
        0.5 * np.sum(W * K * D) / hyper.lengthscale**2,
        0.5 * np.sum(W * K),
        0.5 * hyper.noise_variance * np.trace(W),
    ])
    return float(value), grad


@dataclass
class FitTrace:
    restart: int
    initial: float
    final: float
    hyper: GpHyperparams


def optimize_hyperparams(
    inputs, targets, prior_mean=None, restarts: int = 3, seed: int = 0, init: GpHyperparams | None = None
):
    """Maximise the log marginal likelihood from ``restarts`` starting points.

    Restart 0 starts at ``init`` (default: lengthscale 1, signal variance =
    mean target variance, noise = a tenth of that); later restarts add
    standard-normal perturbations in log space drawn from ``seed``. Returns
    ``(best_hyper, traces)``.
    """
    X = _as_2d(inputs)
    Y = _as_2d(targets)
    if prior_mean is None:
        prior_mean = Y.mean(axis=0)
    var = float(np.mean(np.var(Y, axis=0))) or 1.0
    if init is None:
        init = GpHyperparams(1.0, var, 0.1 * var, tuple(np.atleast_1d(prior_mean)))
    else:
        init = replace(init, prior_mean=tuple(np.atleast_1d(prior_mean)))
    bounds = [
        (np.log(1e-2), np.log(1e3)),
        (np.log(1e-4 * var), np.log(1e4 * var)),
        (np.log(1e-8 * var), np.log(1e2 * var)),
    ]
    norm = 1.0 / Y.size

    def neg(theta):
        v, g = log_marginal_likelihood(init.with_log_params(theta), X, Y)
        return -v * norm, -g * norm

    rng = make_rng(seed, 0x6770)
    traces = []
    for r in range(max(1, restarts)):
        theta0 = init.log_params
        if r > 0:
            theta0 = theta0 + rng.standard_normal(3)
        theta0 = np.clip(theta0, [b[0] for b in bounds], [b[1] for b in bounds])
        start = -neg(theta0)[0] / norm
        res = optimize.minimize(neg, theta0, jac=True, method="L-BFGS-B", bounds=bounds)
        final = -res.fun / norm
        if final < start:
            res.x, final = theta0, start
        traces.append(FitTrace(r, float(start), float(final), init.with_log_params(res.x)))
    best = max(traces, key=lambda t: t.final)
    return best.hyper, traces


@dataclass(frozen=True, eq=False)
class GpModel:
    """Exact GP posterior. Inputs and targets are stored standardised."""

    hyper: GpHyperparams
    train_inputs: np.ndarray
    train_targets: np.ndarray
    chol: np.ndarray
    alpha_weights: np.ndarray
    in_mean: np.ndarray
    in_scale: np.ndarray
    out_mean: np.ndarray
    out_scale: np.ndarray
    stations: tuple = ()
    traces: list = field(default_factory=list)
    jitter: float = 0.0

    @classmethod
    def build(cls, hyper, X, Y, in_mean=None, in_scale=None, out_mean=None, out_scale=None,
              stations=(), traces=()):
        """Factor the training covariance for already-standardised ``X`` and ``Y``."""
        X = _as_2d(X)
        Y = _as_2d(Y)
        n, m = Y.shape
        A = kernel_matrix(X, X, hyper) + hyper.noise_variance * np.eye(n)
        L, jitter = cholesky_jitter(A)
        alpha = linalg.cho_solve((L, True), Y - np.asarray(hyper.prior_mean), check_finite=False)
        d = X.shape[1]
        return cls(
            hyper, X, Y, L, alpha,
            np.zeros(d) if in_mean is None else np.asarray(in_mean, dtype=np.float64),
            np.ones(d) if in_scale is None else np.asarray(in_scale, dtype=np.float64),
            np.zeros(m) if out_mean is None else np.asarray(out_mean, dtype=np.float64),
            np.ones(m) if out_scale is None else np.asarray(out_scale, dtype=np.float64),
            tuple(stations), list(traces), jitter,
        )

    def summary(self) -> dict:
        return {
            "kind": "gaussian-process",
            "stations": list(self.stations),
            "lengthscale": self.hyper.lengthscale,
            "signal_variance": self.hyper.signal_variance,
            "noise_variance": self.hyper.noise_variance,
            "n_train": int(len(self.train_inputs)),
            "jitter": self.jitter,
            "restarts": [
                {"restart": t.restart, "initial_lml": t.initial, "final_lml": t.final}
                for t in self.traces
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.summary(), indent=1)


def gp_predict(model: GpModel, x_star):
    """Posterior mean and variance per output at raw input row(s) ``x_star``.

    A single row returns 1-D arrays of length ``n_outputs``; a matrix returns
    ``(M, n_outputs)`` arrays.
    """
    xs = np.asarray(x_star, dtype=np.float64)
    single = xs.ndim == 1
    xs = np.atleast_2d(xs)
    if xs.shape[1] != model.train_inputs.shape[1]:
        raise DimensionMismatch(
            f"input has {xs.shape[1]} columns, model was trained on {model.train_inputs.shape[1]}"
        )
    Z = (xs - model.in_mean) / model.in_scale
    Ks = kernel_matrix(Z, model.train_inputs, model.hyper)
    mean_std = np.asarray(model.hyper.prior_mean) + Ks @ model.alpha_weights
    V = linalg.solve_triangular(model.chol, Ks.T, lower=True, check_finite=False)
    sf2 = model.hyper.signal_variance
    var_std = sf2 - np.sum(V * V, axis=0)
    if var_std.min(initial=0.0) < -1e-8 * sf2:
        raise FloatingPointError(f"posterior variance {var_std.min():.3g} is negative beyond clip tolerance")
    var_std = np.maximum(var_std, 0.0)
    mean = model.out_mean + model.out_scale * mean_std
    var = var_std[:, None] * model.out_scale[None, :] ** 2
    if single:
        return mean[0], var[0]
    return mean, var


def fit_gp(train: AlignedDataset, budget: int = 2000, restarts: int = 3, seed: int = 0) -> GpModel:
    """Fit on training rows where every station is observed.

    Rows beyond ``budget`` are dropped by a seeded uniform subsample (kept in
    time order).
    """
    complete = np.flatnonzero(train.observed.mask.all(axis=1))
    if len(complete) < 2:
        raise NoCompleteRows(f"{len(complete)} fully observed training rows")
    if len(complete) > budget:
        rng = make_rng(seed, 0x7362)
        complete = np.sort(rng.choice(complete, size=budget, replace=False))
    X = train.forecast.values[complete]
    Y = train.observed.values[complete]
    in_mean, in_scale = X.mean(axis=0), np.std(X, axis=0)
    in_scale = np.where(in_scale > 0, in_scale, 1.0)
    out_mean, out_scale = Y.mean(axis=0), np.std(Y, axis=0)
    out_scale = np.where(out_scale > 0, out_scale, 1.0)
    Z = (X - in_mean) / in_scale
    T = (Y - out_mean) / out_scale
    hyper, traces = optimize_hyperparams(Z, T, prior_mean=np.zeros(T.shape[1]), restarts=restarts, seed=seed)
    log.info("GP fit: lengthscale=%.4g signal=%.4g noise=%.4g lml=%.6g",
             hyper.lengthscale, hyper.signal_variance, hyper.noise_variance,
             max(t.final for t in traces))
    return GpModel.build(hyper, Z, T, in_mean, in_scale, out_mean, out_scale, train.stations, traces)


def gp_impute(model: GpModel, ds: AlignedDataset, return_variance: bool = False):
    """Fill unobserved cells with posterior means.

    With ``return_variance=True`` also returns a ``T x S`` array holding the
    posterior variance at filled cells and NaN elsewhere.
    """
    if model.stations and tuple(model.stations) != tuple(ds.stations):
        raise UnknownStation("station roster differs from the fitted model")
    rows = np.flatnonzero(~ds.observed.mask.all(axis=1))
    est = np.full(ds.observed.shape, np.nan)
    variance = np.full(ds.observed.shape, np.nan)
    if len(rows):
        mean, var = gp_predict(model, ds.forecast.values[rows])
        est[rows] = mean
        variance[rows] = var
    out = fill_missing(ds.observed, est)
    if return_variance:
        return out, np.where(ds.observed.mask, np.nan, variance)
    return out
