import numpy as np
import pytest

from gateforge.kernels import available_backends


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=sorted(available_backends()))
def kernel(request):
    """Each available gradient backend in turn."""
    return available_backends()[request.param]


def pytest_report_header(config):
    from gateforge.kernels import backend_name
    return f"gateforge active kernel: {backend_name()}"
