"""Units, mask configuration and the light-field primitives shared by all solvers.

Internal convention: hbar = k = omega_rec = 1, so the atomic mass is 1/2, the
optical wavelength is 2*pi and the free ground-state revival period is pi/2.
Positions are carried as the phase k*x; anything written to disk is divided
by the wavelength.

Two time conventions are in use:

* recoil time (unit 1/omega_rec) for the quantum and Monte Carlo solvers;
* the classical scaled time, unit 1/(omega_rec * Omega0 * sigma_t).  In that
  unit the pulse width becomes the dimensionless group Omega0 * sigma_t**2 and
  the classical dynamics depend only on (r, sigma_t).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .errors import ZeroDetuning

# Pulse support in units of sigma_t; the field is exactly zero beyond it.
PULSE_CUTOFF = 5.0


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    k: float = 1.0
    omega_rec: float = 1.0

    @property
    def mass(self) -> float:
        return self.hbar * self.k**2 / (2.0 * self.omega_rec)

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / self.k

    @property
    def t_rec(self) -> float:
        return 1.0 / self.omega_rec

    @property
    def t_revival(self) -> float:
        return math.pi * self.t_rec / 2.0


UNITS = UnitSystem()
T_REVIVAL = UNITS.t_revival


@dataclass(frozen=True)
class MaskParams:
    """Complete physical configuration of the light mask.

    Attributes
    ----------
    omega0 : float
        Peak Rabi frequency in units of omega_rec.
    sigma_t : float
        Gaussian pulse width.  Recoil time for the quantum solvers, scaled time
        for the classical ones.
    detuning_ratio : float
        Signed r = Delta / Omega0.
    gamma : float
        Excited-state decay rate in units of omega_rec.
    """

    omega0: float
    sigma_t: float
    detuning_ratio: float
    gamma: float = 0.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if not self.sigma_t > 0:
            raise ValueError(f"sigma_t must be positive, got {self.sigma_t}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not math.isfinite(self.detuning_ratio):
            raise ValueError("detuning_ratio must be finite")

    @property
    def detuning(self) -> float:
        return self.detuning_ratio * self.omega0

    @property
    def sign(self) -> int:
        """Sgn(Delta); raises ZeroDetuning when r == 0."""
        if self.detuning_ratio == 0:
            raise ZeroDetuning("detuning ratio is zero, Sgn(Delta) is undefined")
        return 1 if self.detuning_ratio > 0 else -1

    @property
    def pulse_start(self) -> float:
        return -PULSE_CUTOFF * self.sigma_t

    @property
    def pulse_end(self) -> float:
        return PULSE_CUTOFF * self.sigma_t

    def replace(self, **changes) -> "MaskParams":
        d = asdict(self)
        d.update(changes)
        return MaskParams(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def pulse_envelope(t, sigma_t):
    """exp(-t^2/sigma_t^2) truncated to |t| <= 5 sigma_t."""
    t = np.asarray(t, dtype=float)
    g = np.exp(-((t / sigma_t) ** 2))
    g = np.where(np.abs(t) <= PULSE_CUTOFF * sigma_t, g, 0.0)
    return g if g.ndim else float(g)


def rabi(x, t, p: MaskParams):
    """Omega(x, t) = Omega0 exp(-t^2/sigma_t^2) cos(kx), x given as kx."""
    out = p.omega0 * pulse_envelope(t, p.sigma_t) * np.cos(x)
    return out if np.ndim(out) else float(out)


def adiabatic_potential(x, t, p: MaskParams):
    """Dressed-state potential Sgn(Delta) * (1/2) sqrt(Delta^2 + Omega(x,t)^2).

    The positive branch is selected for blue detuning, the negative one for
    red detuning (the branch adiabatically connected to the bare ground state).
    """
    s = p.sign
    om = rabi(x, t, p)
    out = s * 0.5 * np.sqrt(p.detuning**2 + np.square(om))
    return out if np.ndim(out) else float(out)


class Adiabaticity(NamedTuple):
    margin: float
    emission: float


def adiabaticity_margin(p: MaskParams) -> Adiabaticity:
    """Return |Delta| / sqrt(Omega0/sigma_t) and the emission figure Gamma*sigma_t.

    ``sigma_t`` must be in recoil time.  A margin much larger than one means
    the atoms follow a single dressed state.
    """
    margin = abs(p.detuning) / math.sqrt(p.omega0 / p.sigma_t)
    return Adiabaticity(margin, p.gamma * p.sigma_t)


def scaled_sigma(omega0: float, sigma_recoil: float) -> float:
    """Pulse width in classical scaled time: Omega0 * sigma_t**2 (omega_rec = 1)."""
    return omega0 * sigma_recoil**2


def scaled_time(t_recoil, omega0: float, sigma_recoil: float):
    """Convert recoil time to scaled time (multiply by Omega0 * sigma_t)."""
    return np.asarray(t_recoil) * omega0 * sigma_recoil


def recoil_time(t_scaled, omega0: float, sigma_recoil: float):
    return np.asarray(t_scaled) / (omega0 * sigma_recoil)
