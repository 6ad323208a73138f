"""Elastic-net coordinate descent on a precomputed Gram matrix.

Minimises, for one output on standardised data,

    0.5*yy - c.b + 0.5*b'Gb + lam*alpha*|b|_1 + 0.5*lam*(1-alpha)*|b|^2

with ``G = X'X/n``, ``c = X'y/n``, ``yy = y'y/n``. Each coordinate update is
``b_j <- S(rho_j, lam*alpha) / (G_jj + lam*(1-alpha))`` where ``S`` is the
soft-threshold and ``rho_j = c_j - (Gb)_j + G_jj b_j``.
"""
import numpy as np

from .._accel import njit, select


def objective(G, c, yy, beta, lam, alpha):
    return (
        0.5 * yy
        - c @ beta
        + 0.5 * beta @ G @ beta
        + lam * alpha * np.abs(beta).sum()
        + 0.5 * lam * (1.0 - alpha) * beta @ beta
    )


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def cd_gram_numpy(G, c, yy, lam, alpha, tol, max_iter):
    """Returns ``(beta, sweeps, objective_history)``; history[0] is at beta=0."""
    p = c.shape[0]
    beta = np.zeros(p)
    Gb = np.zeros(p)
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)
    hist = np.empty(max_iter + 1)
    hist[0] = 0.5 * yy
    sweeps = 0
    while sweeps < max_iter:
        max_delta = 0.0
        for j in range(p):
            denom = G[j, j] + l2
            rho = c[j] - Gb[j] + G[j, j] * beta[j]
            new = np.sign(rho) * max(abs(rho) - l1, 0.0) / denom if denom > 0 else 0.0
            delta = new - beta[j]
            if delta != 0.0:
                Gb += delta * G[:, j]
                beta[j] = new
                max_delta = max(max_delta, abs(delta))
        sweeps += 1
        hist[sweeps] = (
            0.5 * yy - c @ beta + 0.5 * beta @ Gb + l1 * np.abs(beta).sum() + 0.5 * l2 * beta @ beta
        )
        if max_delta < tol:
            break
    return beta, sweeps, hist[: sweeps + 1].copy()


@njit
def cd_gram_numba(G, c, yy, lam, alpha, tol, max_iter):
    p = c.shape[0]
    beta = np.zeros(p)
    Gb = np.zeros(p)
    l1 = lam * alpha
    l2 = lam * (1.0 - alpha)
    hist = np.empty(max_iter + 1)
    hist[0] = 0.5 * yy
    sweeps = 0
    while sweeps < max_iter:
        max_delta = 0.0
        for j in range(p):
            denom = G[j, j] + l2
            rho = c[j] - Gb[j] + G[j, j] * beta[j]
            if denom > 0:
                new = np.sign(rho) * max(abs(rho) - l1, 0.0) / denom
            else:
                new = 0.0
            delta = new - beta[j]
            if delta != 0.0:
                for i in range(p):
                    Gb[i] += delta * G[i, j]
                beta[j] = new
                if abs(delta) > max_delta:
                    max_delta = abs(delta)
        sweeps += 1
        cb = 0.0
        bGb = 0.0
        a1 = 0.0
        bb = 0.0
        for j in range(p):
            cb += c[j] * beta[j]
            bGb += beta[j] * Gb[j]
            a1 += abs(beta[j])
            bb += beta[j] * beta[j]
        hist[sweeps] = 0.5 * yy - cb + 0.5 * bGb + l1 * a1 + 0.5 * l2 * bb
        if max_delta < tol:
            break
    return beta, sweeps, hist[: sweeps + 1].copy()


cd_gram = select(cd_gram_numba, cd_gram_numpy)
