from __future__ import annotations

import numpy as np
import pytest

from magtorus.config import preset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def linear_problem():
    return preset("linear")


@pytest.fixture(scope="session")
def degree3_problem():
    return preset("degree3")


@pytest.fixture(scope="session")
def degree4_problem():
    return preset("degree4")
