import pytest

import bimcheck


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # first numba call pays compile time; keep it out of individual tests
    bimcheck.warmup()
