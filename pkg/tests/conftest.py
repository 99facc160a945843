import pytest

from algst.normalize import available_backends, get_kernel


@pytest.fixture(params=available_backends())
def kernel(request):
    """Run the test once per normalization backend present in this build."""

    return get_kernel(request.param)
