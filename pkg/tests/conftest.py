import numpy as np
import pytest

from streamfill.core import AlignedDataset, SeriesMatrix


def days(n, start="2000-01-01"):
    return np.datetime64(start, "D") + np.arange(n)


def matrix(values, stations=None, start="2000-01-01"):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    stations = stations or [f"S{j}" for j in range(values.shape[1])]
    return SeriesMatrix.from_array(days(len(values), start), stations, values)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_ds(rng):
    truth = 50 + 10 * rng.standard_normal((40, 3)).cumsum(axis=0) ** 2 / 40
    fc = 2 * truth + 5
    return AlignedDataset(matrix(truth, ["A", "B", "C"]), matrix(fc, ["A", "B", "C"]))


def sample_se_gp(seed, n=200, ell=1.5, sf2=2.0, sn2=0.1, width=15.0):
    """Draw ``(X, y)`` from a zero-mean SE-kernel GP on ``[0, width]^2``."""
    gen = np.random.default_rng(seed)
    X = gen.uniform(0, width, size=(n, 2))
    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
    K = sf2 * np.exp(-d2 / (2 * ell**2)) + 1e-10 * np.eye(n)
    f = np.linalg.cholesky(K) @ gen.standard_normal(n)
    return X, f + np.sqrt(sn2) * gen.standard_normal(n)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
