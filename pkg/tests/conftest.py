import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci", max_examples=20, derandomize=True, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")

from slicelab.grid import make_grid  # noqa: E402

PI = np.pi


@pytest.fixture(scope="session")
def tor64():
    return make_grid("torus", 64, 64, 2 * PI, 2 * PI)


@pytest.fixture(scope="session")
def sq64():
    return make_grid("square", 64, 64, PI, PI)


@pytest.fixture(scope="session", params=["torus", "square"])
def any_grid(request, tor64, sq64):
    return tor64 if request.param == "torus" else sq64
