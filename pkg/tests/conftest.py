from __future__ import annotations

import numpy as np
import pytest

from aipp_minmax.config import get_settings
from aipp_minmax.problems import QvmInstance, qvm_generate


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _fresh_settings():
    # settings are cached per process; tests that set env vars need a clean read
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def small_qvm() -> QvmInstance:
    return qvm_generate(n=12, l=4, k=3, M_target=10.0, m_target=1.0, density=0.3, seed=5)
