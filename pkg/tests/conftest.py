import numpy as np
import pytest
from hypothesis import settings

from blindverify import _kernels_numpy

try:
    from blindverify import _kernels_numba
except ImportError:  # pragma: no cover
    _kernels_numba = None

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

BACKENDS = [pytest.param(_kernels_numpy, id="numpy")]
if _kernels_numba is not None:
    BACKENDS.append(pytest.param(_kernels_numba, id="numba"))


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)
