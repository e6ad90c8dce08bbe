import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.register_profile("thorough", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def haldane_clean_8():
    from nci import build_haldane, build_honeycomb, diagonalize, fermi_projection
    p = build_honeycomb(8, 8)
    H = build_haldane(p, 0.6, 0.0)
    eig = diagonalize(H)
    return p, H, eig, fermi_projection(eig, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
