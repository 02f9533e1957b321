import pytest
from hypothesis import settings

from diagfd._backend import available_kernels

settings.register_profile("ci", deadline=None, derandomize=True)
settings.load_profile("ci")

KERNELS = available_kernels()


@pytest.fixture(params=sorted(KERNELS))
def kernel(request):
    """Each available kernel backend (pure Python, plus the compiled
    extension when it is built)."""
    return KERNELS[request.param]
