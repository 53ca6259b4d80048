import numpy as np
import pytest

from tvoir.varcore import build_benchmark_model, constant_model


@pytest.fixture(scope="session")
def bench_model():
    return build_benchmark_model(T=1000)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_stable_lags(rng, M, p, radius=0.9):
    """Random VAR(p) lags rescaled so the companion spectral radius is ``radius``."""
    from tvoir.varcore import companion_matrix

    lags = rng.normal(size=(p, M, M))
    stacked = lags.transpose(1, 0, 2).reshape(M, M * p)
    rad = np.abs(np.linalg.eigvals(companion_matrix(stacked))).max()
    # scaling lag k by s^k scales every companion eigenvalue by s
    s = radius / rad
    return lags * (s ** np.arange(1, p + 1))[:, None, None]


def random_spd(rng, M):
    X = rng.normal(size=(M, M))
    return X @ X.T + M * np.eye(M)


def stable_constant_model(rng, M, p, T=5, radius=0.9):
    return constant_model(random_stable_lags(rng, M, p, radius), random_spd(rng, M), T)
