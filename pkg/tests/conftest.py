import os
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from acsafe.models import load_builtin  # noqa: E402

settings.register_profile(
    "default",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def selx():
    return load_builtin("selx")


@pytest.fixture(scope="session")
def hru():
    return load_builtin("hru")


@pytest.fixture(scope="session")
def onestep():
    return load_builtin("selx_onestep")


@pytest.fixture(scope="session")
def chain():
    return load_builtin("selx_chain")


@pytest.fixture(scope="session")
def unreachable():
    return load_builtin("selx_unreachable")


@pytest.fixture(scope="session")
def hru_chain():
    return load_builtin("hru_chain")
