import sys

import pytest

from wfgraph.backend import available_backends, get_backend


@pytest.fixture(params=available_backends())
def backend(request):
    return get_backend(request.param)


@pytest.fixture
def fast_thread_switching():
    """Force frequent GIL handoffs so pure-backend threads interleave."""
    old = sys.getswitchinterval()
    sys.setswitchinterval(1e-5)
    yield
    sys.setswitchinterval(old)
