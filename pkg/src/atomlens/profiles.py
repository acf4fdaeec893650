"""Result containers shared by the classical, quantum and Monte Carlo solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# One period of the atomic density (lambda/2) expressed in wavelengths.
DENSITY_PERIOD = 0.5


@dataclass
class DensityProfile:
    """Atomic density over one standing-wave period.

    ``x`` holds positions in wavelengths on [-1/4, 1/4).  ``P`` is measured
    per unit fraction of the period, so a uniform beam has P == 1 and the
    period average of P is exactly one.
    """

    x: np.ndarray
    P: np.ndarray
    t: float
    convention: str = "recoil"

    def integral(self) -> float:
        # uniform periodic grid: rectangle rule is exact for the normalization
        return float(np.sum(self.P) * (self.x[1] - self.x[0]) / DENSITY_PERIOD)

    def localization(self, sign: int) -> float:
        """Quadrature of 1 + Sgn(Delta) <cos 2kx> over the sampled profile."""
        kx = 2.0 * np.pi * self.x
        return float(1.0 + sign * np.mean(self.P * np.cos(2.0 * kx)))


@dataclass
class LocalizationTrace:
    """Sampled L(t) with its located global minimum.

    ``evaluate`` (optional) recomputes L at an arbitrary time with the solver
    that produced the samples; it is used to refine the minimum.
    """

    times: np.ndarray
    values: np.ndarray
    convention: str
    t_min: Optional[float] = None
    L_min: Optional[float] = None
    evaluate: Optional[Callable[[float], float]] = field(default=None, repr=False)
    stderr: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same shape")

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0
