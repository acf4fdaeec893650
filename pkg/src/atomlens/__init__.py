"""Optimal focusing of two-level atoms by a pulsed standing-wave light mask.

Classical (thin and thick lens), coherent quantum and Monte Carlo
wave-function solvers for the localization factor of an atomic beam, plus
optimization over the squeezing time and detuning.
"""

from .core import MaskParams, UnitSystem, UNITS
from .errors import (
    AtomLensError,
    ComparisonFailed,
    ConfigError,
    EmptyExcited,
    ToleranceNotMet,
    TruncationOverflow,
    WindowTooNarrow,
    ZeroDetuning,
)
from .profiles import DensityProfile, LocalizationTrace

__version__ = "0.1.0"

__all__ = [
    "MaskParams",
    "UnitSystem",
    "UNITS",
    "DensityProfile",
    "LocalizationTrace",
    "AtomLensError",
    "ComparisonFailed",
    "ConfigError",
    "EmptyExcited",
    "ToleranceNotMet",
    "TruncationOverflow",
    "WindowTooNarrow",
    "ZeroDetuning",
    "__version__",
]
