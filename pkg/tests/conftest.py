import numpy as np
import pytest

from gnqa import _backend
from gnqa.model import QuboProblem


@pytest.fixture(params=_backend.available())
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", _backend.get(request.param))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_qubo(rng, n, density=0.6, high=5):
    entries = []
    for i in range(n):
        for j in range(i, n):
            if rng.random() < density:
                entries.append((i, j, float(rng.integers(-high, high + 1))))
    return QuboProblem.from_entries(n, entries)


@pytest.fixture
def two_var():
    return QuboProblem.from_entries(2, [(0, 0, -1), (1, 1, -1), (0, 1, 2)])
