import os
import sys

import numpy as np
import pytest

# 添加项目根目录到Python路径
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from gbridge.core import SeedSpec, make_uniform_grid  # noqa: E402
from gbridge.models import brownian_motion  # noqa: E402
from gbridge.wiener import ConditioningSet, preset_function  # noqa: E402


@pytest.fixture
def bm():
    return brownian_motion(1.0)


@pytest.fixture
def grid256():
    return make_uniform_grid(1.0, 256)


@pytest.fixture
def seed():
    return SeedSpec(20240601)


def conditioning(grid, presets, y=None):
    y = np.zeros(len(presets)) if y is None else y
    return ConditioningSet([preset_function(p, grid) for p in presets], y)


@pytest.fixture
def pin256(grid256):
    """g = 1, y = 0 on 256 segments."""
    return conditioning(grid256, ['one'])
