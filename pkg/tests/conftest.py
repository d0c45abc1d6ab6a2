import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from levy_mkv import LevyModel, DynamicsModel, derive_constants, make_drift, make_interaction

REFERENCE_ETA = 0.05


@pytest.fixture(scope="session")
def ref_levy():
    return LevyModel(dim=1, beta=0.5, c0=1.0, kappa=1.0, trunc_delta=1e-3)


@pytest.fixture(scope="session")
def ref_model():
    return DynamicsModel(dim=1, gamma=2.0, drift=make_drift("linear"),
                         interaction=make_interaction("sine", REFERENCE_ETA))


@pytest.fixture(scope="session")
def ref_model_nointer():
    return DynamicsModel(dim=1, gamma=2.0, drift=make_drift("linear"),
                         interaction=make_interaction("zero"))


@pytest.fixture(scope="session")
def ref_constants(ref_model, ref_levy):
    return derive_constants(ref_model, ref_levy, k0=8.0)
