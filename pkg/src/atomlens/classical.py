"""Point-particle focusing in the adiabatic light potential.

All times here are classical scaled time and ``MaskParams.sigma_t`` is read in
that unit; ``omega0`` plays no role because the scaled equation of motion

    d2X/dtau2 = -(Sgn(r)/sigma_t) dX sqrt(r^2 + exp(-2 tau^2/sigma_t^2) cos^2 X)

contains only the detuning ratio and the pulse width.  X is the phase kx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache, partial
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from ._parallel import ordered_map
from .core import MaskParams, pulse_envelope
from .errors import ToleranceNotMet, ZeroDetuning
from .profiles import DensityProfile, LocalizationTrace

DEFAULT_PARTICLES = 4096
DEFAULT_TOL = 1e-8
BLOCK_SIZE = 256
# The impulse quadrature covers |u| <= 3 pulse widths.
KICK_HALF_WIDTH = 3.0


def uniform_grid(n: int = DEFAULT_PARTICLES) -> np.ndarray:
    """Midpoint grid of initial phases covering [-pi/2, pi/2) once."""
    return -0.5 * np.pi + (np.arange(n) + 0.5) * np.pi / n


@dataclass
class ClassicalEnsemble:
    x0: np.ndarray
    x: np.ndarray
    v: np.ndarray
    tau: float
    sign: int

    def __len__(self):
        return len(self.x0)


def static_ensemble(sign: int, n: int = DEFAULT_PARTICLES) -> ClassicalEnsemble:
    x0 = uniform_grid(n)
    return ClassicalEnsemble(x0, x0.copy(), np.zeros(n), 0.0, sign)


@lru_cache(maxsize=8)
def _gauss_legendre(nodes: int):
    u, w = np.polynomial.legendre.leggauss(nodes)
    return u * KICK_HALF_WIDTH, w * KICK_HALF_WIDTH


def thin_lens_kick(x0, r: float, nodes: int = 200):
    """Scaled velocity imparted by a thin standing-wave lens.

    Gauss-Legendre quadrature of
    Sgn(r)/2 * int_{-3}^{3} du exp(-2u^2) sin(2 x0) / sqrt(r^2 + exp(-2u^2) cos^2 x0).
    """
    if r == 0:
        raise ZeroDetuning("thin_lens_kick needs a nonzero detuning ratio")
    u, w = _gauss_legendre(nodes)
    g2 = np.exp(-2.0 * u**2)
    x = np.asarray(x0, dtype=float)
    xs = x.reshape(-1, 1)
    integrand = g2 * np.sin(2.0 * xs) / np.sqrt(r * r + g2 * np.cos(xs) ** 2)
    out = math.copysign(0.5, r) * (integrand @ w)
    return out.reshape(x.shape) if x.ndim else float(out[0])


def thin_lens_ensemble(r: float, n: int = DEFAULT_PARTICLES) -> ClassicalEnsemble:
    """Uniform ensemble right after the impulse, at tau = 0."""
    x0 = uniform_grid(n)
    return ClassicalEnsemble(x0, x0.copy(), thin_lens_kick(x0, r), 0.0, 1 if r > 0 else -1)


def evolve_thin(ensemble: ClassicalEnsemble, tau: float) -> ClassicalEnsemble:
    """Ballistic drift X = x0 + dv * tau after the kick."""
    return replace(ensemble, x=ensemble.x0 + ensemble.v * tau, tau=float(tau))


def thin_focal_time(r: float) -> float:
    """Paraxial focus of the impulse map, -1 / (d dv / d x0) at the focusing point."""
    xf = 0.5 * np.pi if r > 0 else 0.0
    h = 1e-5
    slope = (thin_lens_kick(xf + h, r) - thin_lens_kick(xf - h, r)) / (2 * h)
    return -1.0 / slope


def thin_lens_window(r: float) -> float:
    """Upper edge of the tau search window for the thin lens.

    Three times the larger of the paraxial focal time and the time the fastest
    atom needs to cross half a period.
    """
    vmax = np.max(np.abs(thin_lens_kick(uniform_grid(512), r)))
    return 3.0 * max(thin_focal_time(r), 0.5 * np.pi / vmax)


def _localization_of(x, sign):
    return 1.0 + sign * np.mean(np.cos(2.0 * x), axis=-1)


def thin_lens_trace(r: float, times, n: int = DEFAULT_PARTICLES) -> LocalizationTrace:
    ens = thin_lens_ensemble(r, n)
    times = np.asarray(times, dtype=float)
    values = np.empty_like(times)
    for i in range(0, len(times), 256):
        tt = times[i : i + 256, None]
        values[i : i + 256] = _localization_of(ens.x0 + ens.v * tt, ens.sign)

    def evaluate(tau):
        return float(_localization_of(ens.x0 + ens.v * tau, ens.sign))

    return LocalizationTrace(times, values, "scaled", evaluate=evaluate)


@dataclass
class Trajectory:
    tau: np.ndarray
    x: np.ndarray
    v: np.ndarray


def _acceleration(x, tau, r, sign, sigma_t, envelope):
    g2 = envelope(tau) ** 2
    return (sign / sigma_t) * g2 * np.sin(2.0 * x) / (2.0 * np.sqrt(r * r + g2 * np.cos(x) ** 2))


def integrate_trajectory(
    x0,
    p: MaskParams,
    tau_end: float,
    tol: float = DEFAULT_TOL,
    samples=None,
    envelope: Optional[Callable[[float], float]] = None,
    tau_start: Optional[float] = None,
    v0=None,
) -> Trajectory:
    """Integrate Newton's equation in the adiabatic potential.

    ``x0`` may be a scalar or an array of independent particles.  Integration
    starts at rest at ``tau_start`` (default -5 sigma_t).  With the default
    envelope the field vanishes beyond +5 sigma_t and the remaining flight is
    done analytically.  ``samples`` (sorted, within [tau_start, tau_end])
    selects the output times; by default only ``tau_end`` is returned.
    """
    r = p.detuning_ratio
    sign = p.sign
    sigma = p.sigma_t
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = len(x0)
    t0 = p.pulse_start if tau_start is None else float(tau_start)
    samples = np.array([tau_end] if samples is None else samples, dtype=float)
    if np.any(np.diff(samples) < 0):
        raise ValueError("samples must be sorted")
    if len(samples) and (samples[0] < t0 or samples[-1] > tau_end):
        raise ValueError("samples must lie inside [tau_start, tau_end]")

    free_flight = envelope is None
    if envelope is None:
        envelope = partial(pulse_envelope, sigma_t=sigma)
    t1 = min(tau_end, p.pulse_end) if free_flight else tau_end
    t1 = max(t1, t0)

    y0 = np.concatenate([x0, np.zeros(n) if v0 is None else np.asarray(v0, dtype=float)])
    xs = np.empty((len(samples), n))
    vs = np.empty((len(samples), n))
    inside = samples <= t1

    if t1 > t0:

        def rhs(tau, y):
            return np.concatenate([y[n:], _acceleration(y[:n], tau, r, sign, sigma, envelope)])

        t_eval = samples[inside]
        extra = not (t_eval.size and t_eval[-1] == t1)
        if extra:
            t_eval = np.append(t_eval, t1)
        sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=tol, atol=tol, t_eval=t_eval)
        if sol.status < 0:
            raise ToleranceNotMet(f"trajectory integration failed: {sol.message}")
        y1 = sol.y[:, -1]
        kept = sol.y[:, :-1] if extra else sol.y
        xs[inside] = kept[:n].T
        vs[inside] = kept[n:].T
    else:
        xs[inside] = y0[:n]
        vs[inside] = y0[n:]
        y1 = y0

    after = ~inside
    if np.any(after):
        dt = (samples[after] - t1)[:, None]
        xs[after] = y1[:n] + y1[n:] * dt
        vs[after] = y1[n:]
    return Trajectory(samples, xs, vs)


def _thick_block(job):
    """Integrate one fixed block of particles; return cos(2X) sums and checkpoints."""
    x0, p, times, tol, checkpoint_idx = job
    traj = integrate_trajectory(x0, p, times[-1], tol=tol, samples=times)
    cos_sum = np.sum(np.cos(2.0 * traj.x), axis=1)
    return cos_sum, traj.x[checkpoint_idx], traj.v[checkpoint_idx]


def _blocks(x0, block=BLOCK_SIZE):
    return [x0[i : i + block] for i in range(0, len(x0), block)]


def thick_lens_ensemble(
    p: MaskParams, tau: float, n: int = DEFAULT_PARTICLES, tol: float = DEFAULT_TOL, workers: int = 1
) -> ClassicalEnsemble:
    """Ensemble state at ``tau`` from full trajectory integration."""
    x0 = uniform_grid(n)
    tau = float(tau)
    start = min(p.pulse_start, tau)
    jobs = [(blk, p, start, tau, tol) for blk in _blocks(x0)]
    parts = ordered_map(_thick_state_block, jobs, workers)
    x = np.concatenate([a for a, _ in parts])
    v = np.concatenate([b for _, b in parts])
    return ClassicalEnsemble(x0, x, v, tau, p.sign)


def _thick_state_block(job):
    x0, p, start, tau, tol = job
    traj = integrate_trajectory(x0, p, tau, tol=tol, tau_start=start)
    return traj.x[-1], traj.v[-1]


def thick_lens_trace(
    p: MaskParams,
    times,
    n: int = DEFAULT_PARTICLES,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
    checkpoints: int = 64,
) -> LocalizationTrace:
    """L(tau) from full trajectories, sampled at ``times`` (>= -5 sigma_t).

    Particles are integrated in fixed blocks of 256 so the adaptive step
    sequence, and hence every bit of the result, does not depend on the
    number of workers.
    """
    times = np.asarray(times, dtype=float)
    if times[0] < p.pulse_start:
        raise ValueError("thick-lens traces start at or after -5 sigma_t")
    sign = p.sign
    x0 = uniform_grid(n)
    cidx = np.unique(np.linspace(0, len(times) - 1, min(checkpoints, len(times))).astype(int))
    jobs = [(blk, p, times, tol, cidx) for blk in _blocks(x0)]
    parts = ordered_map(_thick_block, jobs, workers)
    total = np.zeros(len(times))
    for cos_sum, _, _ in parts:
        total += cos_sum
    values = 1.0 + sign * total / n
    cx = np.concatenate([c[1] for c in parts], axis=1)
    cv = np.concatenate([c[2] for c in parts], axis=1)
    ctimes = times[cidx]

    def evaluate(tau):
        j = np.searchsorted(ctimes, tau, side="right") - 1
        if j < 0:
            traj = integrate_trajectory(x0, p, tau, tol=tol)
            return float(_localization_of(traj.x[-1], sign))
        xs = []
        for lo in range(0, n, BLOCK_SIZE):
            sl = slice(lo, lo + BLOCK_SIZE)
            traj = integrate_trajectory(
                cx[j, sl], p, tau, tol=tol, tau_start=ctimes[j], v0=cv[j, sl]
            )
            xs.append(traj.x[-1])
        return float(_localization_of(np.concatenate(xs), sign))

    return LocalizationTrace(times, values, "scaled", evaluate=evaluate)


def classical_localization(ensemble: ClassicalEnsemble) -> float:
    """L = 1 + Sgn(Delta) <cos 2X>, averaged uniformly over the initial grid."""
    return float(_localization_of(ensemble.x, ensemble.sign))


def classical_density(ensemble: ClassicalEnsemble, bins: int = 256) -> DensityProfile:
    """Histogram of X folded into one density period, mean(P) == 1."""
    if bins < 64:
        raise ValueError("at least 64 bins are required")
    folded = np.mod(ensemble.x + 0.5 * np.pi, np.pi) - 0.5 * np.pi
    counts, edges = np.histogram(folded, bins=bins, range=(-0.5 * np.pi, 0.5 * np.pi))
    P = counts * (bins / len(ensemble.x))
    centers = 0.5 * (edges[:-1] + edges[1:]) / (2.0 * np.pi)
    return DensityProfile(centers, P.astype(float), ensemble.tau, "scaled")

