from fractions import Fraction as F

import numpy as np
import pytest

from ierk.tableau import registry

# One representative (exact) parameter point per registry family.
REGISTRY_CASES = [
    ("IERK1", {"theta": F(1, 2)}),
    ("IERK2-1", {"c2": 1, "a33": 1}),
    ("IERK2-2", {"a33": F(1, 2) + F(1, 4)}),  # float family; value above the PSD bound
    ("IERK2-Radau", {"c2": F(3, 2)}),
    ("IERK3-4stage", {"a22": 2}),
    ("IERK3-1", {"a55": F(4, 5)}),
    ("IERK3-2", {"a43": F(-3, 5)}),
    ("IERK3-Radau", {"ahat43": 1}),
    ("IERK4-A1", {}),
    ("IERK4-A2", {}),
]


@pytest.fixture(scope="session")
def registry_tableaux():
    return [registry(name, params) for name, params in REGISTRY_CASES]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
