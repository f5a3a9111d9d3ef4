import pytest

from securetag.harness import default_profile


@pytest.fixture(scope="session")
def profile():
    """Profile calibrated on seeded simulator defaults at 200 ms / 20 s."""
    return default_profile()
