import sys
from pathlib import Path

import numpy as np
import pytest

from lejapce import ProductDistribution, Uniform

CHILD = Path(__file__).parent / "children" / "sim.py"


def child_command(mode: str) -> list[str]:
    return [sys.executable, str(CHILD), mode]


@pytest.fixture
def u2():
    return ProductDistribution((Uniform(-1, 1), Uniform(-1, 1)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
