"""Stability analysis for skew-product systems, instantiated on the Zhukovski gyrostat."""
from . import gyrostat, linalg, numerics, skewprod
from .gyrostat import EquilibriumState, Family, GyrostatParams, analyze
from .skewprod import Stability, StabilityReport, Verdict

__version__ = "0.1.0"

__all__ = [
    "gyrostat",
    "linalg",
    "numerics",
    "skewprod",
    "EquilibriumState",
    "Family",
    "GyrostatParams",
    "analyze",
    "Stability",
    "StabilityReport",
    "Verdict",
]
