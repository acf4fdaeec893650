"""Two-level atom in the standing wave, solved in the bare-state momentum basis.

The excited amplitudes C^e_n sit at momentum p0 + (2n+1) and the ground
amplitudes C^g_n at p0 + 2n (units of hbar k).  Internally both ladders are
interleaved into one chain ordered by momentum, so the light couples nearest
neighbours with strength Omega(t)/4 and ``cos 2kx`` couples next-nearest
neighbours.  Amplitudes absorb the lambda/2 normalization factor: a state
normalized over one period has sum |C|^2 == 1.

Times are recoil times.  Inside |t| <= 5 sigma_t the amplitude equations are
integrated with an adaptive Dormand-Prince 8(5,3) scheme; outside, the
Hamiltonian is diagonal and propagation is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.fft import fft, fftfreq, ifft
from scipy.integrate import solve_ivp

from .core import T_REVIVAL, MaskParams, adiabatic_potential
from .errors import ToleranceNotMet, TruncationOverflow
from .profiles import DensityProfile, LocalizationTrace

DEFAULT_TOL = 1e-11
START_NMAX = 64
MAX_NMAX = 4096
BOUNDARY_LIMIT = 1e-8
TRACE_SAMPLES = 4000


@dataclass
class ModeState:
    """Truncated Fourier amplitudes of the two-component wave function.

    ``c_e[n + n_max]`` and ``c_g[n + n_max]`` hold C^e_n and C^g_n for
    n in [-n_max, n_max].
    """

    c_e: np.ndarray
    c_g: np.ndarray
    p0: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        self.c_e = np.asarray(self.c_e, dtype=complex)
        self.c_g = np.asarray(self.c_g, dtype=complex)
        if self.c_e.shape != self.c_g.shape or self.c_e.ndim != 1 or len(self.c_e) % 2 == 0:
            raise ValueError("c_e and c_g must be equal odd-length 1-D arrays")

    @property
    def n_max(self) -> int:
        return (len(self.c_g) - 1) // 2

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.c_e) ** 2) + np.sum(np.abs(self.c_g) ** 2))

    def excited_population(self) -> float:
        return float(np.sum(np.abs(self.c_e) ** 2))

    def boundary_population(self) -> float:
        ends = [self.c_e[0], self.c_e[-1], self.c_g[0], self.c_g[-1]]
        return float(sum(abs(c) ** 2 for c in ends))

    def chain(self) -> np.ndarray:
        out = np.empty(2 * len(self.c_g), dtype=complex)
        out[0::2] = self.c_g
        out[1::2] = self.c_e
        return out

    @classmethod
    def from_chain(cls, chain, p0=0.0, t=0.0) -> "ModeState":
        chain = np.asarray(chain, dtype=complex)
        return cls(chain[1::2].copy(), chain[0::2].copy(), float(p0), float(t))

    def extended(self, n_max: int) -> "ModeState":
        if n_max < self.n_max:
            raise ValueError("cannot shrink the mode range")
        pad = n_max - self.n_max
        return replace(self, c_e=np.pad(self.c_e, pad), c_g=np.pad(self.c_g, pad))

    def normalized(self) -> "ModeState":
        s = math.sqrt(self.norm())
        return replace(self, c_e=self.c_e / s, c_g=self.c_g / s)


def init_uniform_ground(n_max: int = START_NMAX, t: float = 0.0) -> ModeState:
    """Plane wave in the ground state with zero transverse momentum."""
    c_g = np.zeros(2 * n_max + 1, dtype=complex)
    c_g[n_max] = 1.0
    return ModeState(np.zeros_like(c_g), c_g, 0.0, t)


def chain_energies(n_max: int, p0: float, p: MaskParams) -> np.ndarray:
    """Diagonal of the (non-Hermitian) chain Hamiltonian in units of omega_rec."""
    q = np.arange(-2 * n_max, 2 * n_max + 2, dtype=float)
    excited = np.zeros(len(q), dtype=bool)
    excited[1::2] = True
    kinetic = (p0 + q) ** 2
    internal = np.where(excited, -0.5 * p.detuning - 0.5j * p.gamma, 0.5 * p.detuning)
    return kinetic + internal


def chain_localization(chain, sign: int) -> float:
    """1 + Sgn * Re sum C_j C*_{j+2} / norm for one interleaved chain."""
    c = np.asarray(chain)
    norm = np.vdot(c, c).real
    return float(1.0 + sign * np.real(np.vdot(c[2:], c[:-2])) / norm)


def quantum_localization(state: ModeState, sign: int) -> float:
    """Localization factor from the mode sums, evaluated on the normalized state."""
    s = np.vdot(state.c_e[1:], state.c_e[:-1]) + np.vdot(state.c_g[1:], state.c_g[:-1])
    return float(1.0 + sign * s.real / state.norm())


def density_from_modes(state: ModeState, x_samples: int = 256) -> DensityProfile:
    """|psi_e|^2 + |psi_g|^2 on a uniform grid over [-lambda/4, lambda/4).

    The common factor exp(i p0 x) drops out of the density.  The result is
    scaled to unit period average.
    """
    x = -0.25 + 0.5 * np.arange(x_samples) / x_samples
    kx = 2.0 * np.pi * x
    n = state.n
    psi_g = np.exp(1j * np.outer(kx, 2 * n)) @ state.c_g
    psi_e = np.exp(1j * np.outer(kx, 2 * n + 1)) @ state.c_e
    dens = np.abs(psi_g) ** 2 + np.abs(psi_e) ** 2
    return DensityProfile(x, dens / np.mean(dens), state.t, "recoil")


@dataclass
class _Segment:
    t: float
    chain: np.ndarray
    samples: list
    status: str  # "done", "jump" or "overflow"


def _rhs_factory(energies, p: MaskParams):
    quarter = 0.25 * p.omega0
    inv_s2 = 1.0 / p.sigma_t**2

    def rhs(t, y):
        w = quarter * math.exp(-t * t * inv_s2)
        out = energies * y
        out[1:] += w * y[:-1]
        out[:-1] += w * y[1:]
        return -1j * out

    return rhs


def _norm_crossing_free(chain, energies, t0, t1, threshold):
    """Time in (t0, t1] where the diagonal evolution's norm reaches ``threshold``."""
    decay = -2.0 * energies.imag
    pop = np.abs(chain) ** 2
    stable = pop[decay == 0].sum()
    lossy = pop[decay > 0]
    if lossy.sum() == 0 or threshold <= stable:
        return None
    rates = decay[decay > 0]
    if np.all(rates == rates[0]):
        dt = math.log(lossy.sum() / (threshold - stable)) / rates[0]
        return t0 + dt if t0 + dt <= t1 else None
    raise NotImplementedError("free-flight jump search assumes one decay rate")


def _advance(
    chain,
    p0: float,
    t0: float,
    t1: float,
    p: MaskParams,
    tol: float = DEFAULT_TOL,
    sample_times: Sequence[float] = (),
    threshold: Optional[float] = None,
    check_boundary: bool = True,
) -> _Segment:
    """Advance one chain from t0 to t1.

    Stops early when the norm falls to ``threshold`` (status "jump") or when
    the boundary modes exceed their population limit (status "overflow").
    Chains at ``sample_times`` inside the covered interval are recorded.
    """
    n_max = (len(chain) // 2 - 1) // 2
    energies = chain_energies(n_max, p0, p)
    samples = []
    sample_times = np.asarray(sample_times, dtype=float)
    sample_times = sample_times[(sample_times >= t0) & (sample_times <= t1)]
    t = t0
    y = np.asarray(chain, dtype=complex)

    def free(y, t_from, t_to):
        return y * np.exp(-1j * energies * (t_to - t_from))

    def free_until(y, t_from, t_to):
        t_stop = t_to
        status = "done"
        if threshold is not None and p.gamma > 0:
            tj = _norm_crossing_free(y, energies, t_from, t_to, threshold)
            if tj is not None:
                t_stop, status = tj, "jump"
        for ts in sample_times[(sample_times >= t_from) & (sample_times <= t_stop)]:
            if not samples or samples[-1][0] < ts:
                samples.append((float(ts), free(y, t_from, ts)))
        return t_stop, free(y, t_from, t_stop), status

    # before the pulse
    if t < p.pulse_start:
        t_to = min(t1, p.pulse_start)
        t, y, status = free_until(y, t, t_to)
        if status != "done" or t >= t1:
            return _Segment(t, y, samples, status)

    # inside the pulse
    if t < p.pulse_end and t < t1:
        t_to = min(t1, p.pulse_end)
        events = []
        if threshold is not None:

            def jump_event(_, yy):
                return np.vdot(yy, yy).real - threshold

            jump_event.terminal = True
            jump_event.direction = -1
            events.append(jump_event)
        if check_boundary:

            def boundary_event(_, yy):
                edge = yy[0:2], yy[-2:]
                return float(sum(np.vdot(e, e).real for e in edge)) - BOUNDARY_LIMIT

            boundary_event.terminal = True
            boundary_event.direction = 1
            events.append(boundary_event)
            if boundary_event(t, y) > 0:
                return _Segment(t, y, samples, "overflow")
        inner = sample_times[(sample_times >= t) & (sample_times <= t_to)]
        if samples and inner.size and inner[0] <= samples[-1][0]:
            inner = inner[1:]
        extra = not (inner.size and inner[-1] == t_to)
        t_eval = np.append(inner, t_to) if extra else inner
        sol = solve_ivp(
            _rhs_factory(energies, p),
            (t, t_to),
            y,
            method="DOP853",
            rtol=tol,
            atol=tol * 1e-2,
            t_eval=t_eval,
            events=events or None,
        )
        if sol.status < 0:
            raise ToleranceNotMet(f"mode integration failed: {sol.message}")
        for k, ts in enumerate(sol.t):
            if not (extra and k == len(t_eval) - 1):
                samples.append((float(ts), sol.y[:, k].copy()))
        if sol.status == 1:
            which = next(i for i, te in enumerate(sol.t_events) if len(te))
            status = "jump" if (threshold is not None and which == 0) else "overflow"
            return _Segment(float(sol.t_events[which][0]), sol.y_events[which][0].copy(), samples, status)
        y = sol.y[:, -1].copy()
        t = t_to
        if t >= t1:
            return _Segment(t, y, samples, "done")

    # after the pulse
    t, y, status = free_until(y, t, t1)
    return _Segment(t, y, samples, status)



def _evolve(state: ModeState, p: MaskParams, t_end: float, tol, sample_times=(), threshold=None):
    """Advance ``state`` with automatic doubling of the mode range.

    Returns the final state, the sampled states and the stop status.
    """
    if t_end < state.t:
        raise ValueError("t_end precedes the state time")
    while True:
        seg = _advance(state.chain(), state.p0, state.t, t_end, p, tol, sample_times, threshold)
        if seg.status != "overflow":
            break
        if 2 * state.n_max > MAX_NMAX:
            raise TruncationOverflow(
                f"boundary population exceeded {BOUNDARY_LIMIT} with n_max = {state.n_max}"
            )
        state = state.extended(2 * state.n_max)
    final = ModeState.from_chain(seg.chain, state.p0, seg.t)
    samples = [ModeState.from_chain(c, state.p0, ts) for ts, c in seg.samples]
    return final, samples, seg.status


def evolve_modes(state: ModeState, p: MaskParams, t_end: float, tol: float = DEFAULT_TOL) -> ModeState:
    """Integrate the amplitude equations from ``state.t`` to ``t_end``.

    Uses the general form with decay rate ``p.gamma`` and the state's
    momentum offset; with gamma > 0 this is the no-jump (non-Hermitian)
    evolution and the norm decays.  The mode range is doubled whenever the
    boundary population exceeds 1e-8.
    """
    final, _, _ = _evolve(state, p, t_end, tol)
    return final


def default_times(p: MaskParams, samples: int = TRACE_SAMPLES) -> np.ndarray:
    """Trace grid from one pulse width before the pulse centre to one revival period."""
    return np.linspace(-p.sigma_t, T_REVIVAL, samples)


class ModeRun:
    """One deterministic evolution of the uniform ground-state beam.

    The pulse is integrated once from -5 sigma_t, recording the states at
    ``checkpoints``; everything after the pulse follows analytically from the
    state at +5 sigma_t.  With ``p.gamma > 0`` this is the conditional
    no-jump evolution and localization values refer to the normalized state.
    """

    def __init__(self, p: MaskParams, checkpoints=(), tol: float = DEFAULT_TOL, n_max: int = START_NMAX):
        self.params = p
        self.tol = tol
        self.sign = p.sign
        self.start = init_uniform_ground(n_max, p.pulse_start)
        cps = np.unique(np.asarray(checkpoints, dtype=float))
        cps = cps[(cps > p.pulse_start) & (cps < p.pulse_end)]
        self.end, states, _ = _evolve(self.start, p, p.pulse_end, tol, cps)
        self.start = self.start.extended(self.end.n_max)
        self.checkpoints = states
        self._cp_times = np.array([s.t for s in states])
        self._energies = chain_energies(self.end.n_max, 0.0, p)

    @property
    def n_max(self) -> int:
        return self.end.n_max

    def state_at(self, t: float) -> ModeState:
        p = self.params
        if t >= p.pulse_end:
            chain = self.end.chain() * np.exp(-1j * self._energies * (t - p.pulse_end))
            return ModeState.from_chain(chain, 0.0, t)
        if t <= p.pulse_start:
            return replace(self.start, t=float(t))
        j = np.searchsorted(self._cp_times, t, side="right") - 1
        if j >= 0 and self._cp_times[j] == t:
            return self.checkpoints[j]
        base = self.checkpoints[j] if j >= 0 else self.start
        final, _, _ = _evolve(base, p, t, self.tol)
        return final

    def localization(self, t: float) -> float:
        return quantum_localization(self.state_at(t), self.sign)

    def localization_many(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        out = np.empty(len(times))
        late = times >= self.params.pulse_end
        for i in np.flatnonzero(~late):
            out[i] = self.localization(times[i])
        if np.any(late):
            out[late] = self._free_localization(times[late] - self.params.pulse_end)
        return out

    def _free_localization(self, dts, chunk: int = 256) -> np.ndarray:
        c = self.end.chain()
        e = self._energies
        a = c[:-2] * np.conj(c[2:])
        w = e[:-2] - np.conj(e[2:])
        keep = np.abs(a) > 1e-300
        a, w = a[keep], w[keep]
        pop = np.abs(c) ** 2
        pkeep = pop > 0
        pop, rate = pop[pkeep], 2.0 * e.imag[pkeep]
        out = np.empty(len(dts))
        for i in range(0, len(dts), chunk):
            dt = dts[i : i + chunk, None]
            cross = np.exp(-1j * w * dt) @ a
            norm = np.exp(rate * dt) @ pop
            out[i : i + chunk] = 1.0 + self.sign * cross.real / norm
        return out

    def trace(self, times=None) -> LocalizationTrace:
        times = default_times(self.params) if times is None else np.asarray(times, dtype=float)
        return LocalizationTrace(
            times, self.localization_many(times), "recoil", evaluate=self.localization
        )


def quantum_trace(p: MaskParams, times=None, tol: float = DEFAULT_TOL) -> LocalizationTrace:
    """Coherent L(t) in recoil time; in-pulse samples are stored as checkpoints."""
    times = default_times(p) if times is None else np.asarray(times, dtype=float)
    return ModeRun(p, checkpoints=times, tol=tol).trace(times)


# -- adiabatic single-potential reference ----------------------------------


def _split_step(p: MaskParams, times, grid: int, dt: float):
    """Strang split-step evolution of one scalar wave function on [-pi/2, pi/2)."""
    x = -0.5 * np.pi + np.pi * np.arange(grid) / grid
    q = 2.0 * fftfreq(grid, 1.0 / grid)
    offset = p.sign * 0.5 * abs(p.detuning)
    half_kin = np.exp(-0.5j * q**2 * dt)
    psi = np.ones(grid, dtype=complex)
    t = p.pulse_start
    out = []
    for target in times:
        if target < t:
            raise ValueError("times must be sorted and not precede -5 sigma_t")
        # free flight before/after the pulse is exact
        t_in = min(max(t, p.pulse_start), p.pulse_end)
        t_out = min(max(target, p.pulse_start), p.pulse_end)
        if t_out > t_in:
            steps = max(1, math.ceil((t_out - t_in) / dt - 1e-9))
            h = (t_out - t_in) / steps
            hk = half_kin if h == dt else np.exp(-0.5j * q**2 * h)
            for k in range(steps):
                tm = t_in + (k + 0.5) * h
                v = adiabatic_potential(x, tm, p) - offset
                psi = ifft(hk * fft(psi))
                psi *= np.exp(-1j * v * h)
                psi = ifft(hk * fft(psi))
        free = (target - t) - max(0.0, t_out - t_in)
        if free > 0:
            psi = ifft(np.exp(-1j * q**2 * free) * fft(psi))
        t = target
        out.append(psi.copy())
    return x, out


def _reference_runs(p: MaskParams, times, grid, dt, tol, max_halvings):
    if p.gamma != 0:
        raise ValueError("the adiabatic reference is coherent only (gamma = 0)")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    dt = p.sigma_t / 400.0 if dt is None else dt
    x, coarse = _split_step(p, times, grid, dt)
    err = float("inf")
    for _ in range(max_halvings):
        dt /= 2.0
        x, fine = _split_step(p, times, grid, dt)
        err = max(np.max(np.abs(a - b)) for a, b in zip(coarse, fine))
        if err <= tol:
            return x, fine
        coarse = fine
    raise ToleranceNotMet(f"split-step results still differ by {err:.2e} after {max_halvings} halvings")


def adiabatic_reference_evolve(
    p: MaskParams, t_end: float, grid: int = 512, dt=None, tol: float = 1e-3, max_halvings: int = 6
) -> DensityProfile:
    """Density at ``t_end`` from one wave function moving in the dressed potential.

    Only meaningful in the adiabatic regime; intended as an independent check
    of the two-level mode solver.  The step is halved until two successive
    runs agree to ``tol`` in the wave function.
    """
    x, psis = _reference_runs(p, [t_end], grid, dt, tol, max_halvings)
    dens = np.abs(psis[-1]) ** 2
    # x grid is already uniform over one density period
    return DensityProfile(x / (2.0 * np.pi), dens / np.mean(dens), float(t_end), "recoil")


def adiabatic_reference_trace(
    p: MaskParams, times, grid: int = 512, dt=None, tol: float = 1e-3, max_halvings: int = 6
) -> LocalizationTrace:
    x, psis = _reference_runs(p, times, grid, dt, tol, max_halvings)
    vals = []
    for psi in psis:
        dens = np.abs(psi) ** 2
        vals.append(1.0 + p.sign * np.mean(dens * np.cos(2.0 * x)) / np.mean(dens))
    return LocalizationTrace(np.atleast_1d(times), np.array(vals), "recoil")
