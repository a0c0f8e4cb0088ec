"""
Liouville Ellipsoid - 測試共用 fixture
"""

import numpy as np
import pytest

from app.core.config import Settings
from app.services.ellipsoid_core import make_shape


@pytest.fixture(scope="session")
def shape_321():
    """預設橢球 a = 3, b = 2, c = 1"""
    return make_shape(3.0, 2.0, 1.0)


@pytest.fixture(scope="session")
def shape_flat():
    """較扁的橢球，用於檢查結果不依賴特定半軸"""
    return make_shape(5.0, 1.5, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20181019)


@pytest.fixture
def settings():
    return Settings()
