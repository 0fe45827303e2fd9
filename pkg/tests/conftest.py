import sys
from pathlib import Path

import pytest

# make the oracle module importable from any test
sys.path.insert(0, str(Path(__file__).parent))

from jfft.material import isotropic_material


@pytest.fixture(scope="session")
def solid_material():
    """Solid-phase parameters used throughout the experiments."""
    return isotropic_material(2.0 / 3.0, 0.5)
