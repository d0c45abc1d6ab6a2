"""Coupling construction and quantitative contraction / propagation-of-chaos
machinery for Levy-driven kinetic Langevin dynamics of McKean-Vlasov type."""

from ._kernels import BACKEND
from .forces import make_drift, make_interaction
from .levy import LevyModel, fit_sigma_envelope
from .metrics import ConstantsReport, DynamicsModel, derive_constants

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConstantsReport",
    "DynamicsModel",
    "LevyModel",
    "derive_constants",
    "fit_sigma_envelope",
    "make_drift",
    "make_interaction",
    "__version__",
]
