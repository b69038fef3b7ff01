import numpy as np
import pytest

from spherefield import CovarianceModel, SpectrumParams


@pytest.fixture(scope="session")
def params31() -> SpectrumParams:
    return SpectrumParams(alpha=3.0, beta=1.0)


@pytest.fixture(scope="session")
def model31_100(params31) -> CovarianceModel:
    return CovarianceModel.build(params31, 100)


@pytest.fixture(scope="session")
def model31_400(params31) -> CovarianceModel:
    return CovarianceModel.build(params31, 400)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def random_unit_vectors(n: int, seed: int) -> np.ndarray:
    g = np.random.default_rng(seed)
    v = g.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
