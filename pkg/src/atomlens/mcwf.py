"""Monte Carlo wave-function treatment of spontaneous emission.

Each trajectory evolves under the non-Hermitian amplitude equations until its
norm decays to a uniformly drawn threshold, then collapses onto the ground
ladder with a photon recoil drawn from the dipole emission pattern projected
on the standing-wave axis.  Ensemble densities are equal-weight averages of
the normalized trajectory densities.

Random numbers come from Philox streams keyed by (base_seed, trajectory
index); each trajectory draws, in order, its first threshold and then a
(photon, threshold) pair per jump.  Results therefore do not depend on how
trajectories are distributed over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from ._parallel import ordered_map
from .core import MaskParams
from .errors import EmptyExcited
from .profiles import DensityProfile, LocalizationTrace
from .quantum import (
    DEFAULT_TOL,
    START_NMAX,
    ModeRun,
    ModeState,
    _evolve,
    density_from_modes,
    init_uniform_ground,
    quantum_localization,
)

DEFAULT_TRAJECTORIES = 5000
BOOTSTRAP_RESAMPLES = 200
CHUNK = 250
BRANCH_CHECKPOINTS = 400
_BOOTSTRAP_KEY = 2**32 - 1


def sample_photon_momentum(u):
    """Inverse CDF of N(k') = (3/8k)(1 + (k'/k)^2) on [-k, k], returned as k'/k.

    The CDF condition (3/8)(v + v^3/3) + 1/2 = u is the depressed cubic
    v^3 + 3v = 8u - 4, whose single real root is 2 sinh(asinh(4u - 2)/3).
    """
    u = np.asarray(u, dtype=float)
    v = 2.0 * np.sinh(np.arcsinh(4.0 * u - 2.0) / 3.0)
    v = np.clip(v, -1.0, 1.0)
    return v if v.ndim else float(v)


def trajectory_stream(base_seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for one trajectory."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def draw_epsilon(rng: np.random.Generator) -> float:
    # uniform on (0, 1]
    return 1.0 - rng.random()


@dataclass
class TrajectoryState:
    state: ModeState
    epsilon: float
    jumps: List[Tuple[float, float]] = field(default_factory=list)
    seed: Optional[Tuple[int, int]] = None

    @property
    def threshold(self) -> float:
        return 1.0 - self.epsilon


@dataclass
class JumpSearch:
    time: Optional[float]
    trajectory: TrajectoryState
    samples: List[ModeState]


def detect_jump(
    traj: TrajectoryState, p: MaskParams, t_end: float, tol: float = DEFAULT_TOL, sample_times=()
) -> JumpSearch:
    """Evolve under the non-Hermitian Hamiltonian until the norm hits 1 - epsilon.

    Inside the pulse the crossing is bracketed by the integrator step and
    located by root finding on its dense output; after the pulse the norm is
    analytic and the crossing is solved for directly.  ``time`` is None when
    ``t_end`` is reached first.
    """
    final, samples, status = _evolve(
        traj.state, p, t_end, tol, sample_times, threshold=traj.threshold
    )
    moved = replace(traj, state=final)
    return JumpSearch(final.t if status == "jump" else None, moved, samples)


def collapse(traj: TrajectoryState, k_prime: float, epsilon: float) -> TrajectoryState:
    """Project onto the ground ladder after emitting a photon of momentum k'.

    C^g_n <- C^e_n / sqrt(sum |C^e|^2), C^e_n <- 0, p0 <- p0 + 1 - k'.
    """
    s = traj.state
    pop = s.excited_population()
    if pop <= 0.0:
        raise EmptyExcited(f"no excited population at t = {s.t}")
    c_g = s.c_e / math.sqrt(pop)
    new = ModeState(np.zeros_like(c_g), c_g, s.p0 + 1.0 - k_prime, s.t)
    return TrajectoryState(new, epsilon, traj.jumps + [(s.t, float(k_prime))], traj.seed)


class NoJumpBranch:
    """Shared conditional evolution of a trajectory that has not jumped yet.

    Every trajectory follows this branch until its first jump, so it is
    integrated once; trajectories only restart from the last checkpoint
    before their norm crossing.
    """

    def __init__(self, p: MaskParams, sample_times, tol: float = DEFAULT_TOL, n_max: int = START_NMAX):
        self.params = p
        self.sample_times = np.asarray(sample_times, dtype=float)
        grid = np.linspace(p.pulse_start, p.pulse_end, BRANCH_CHECKPOINTS)
        self.run = ModeRun(p, checkpoints=np.union1d(grid, self.sample_times), tol=tol, n_max=n_max)
        cps = [self.run.start] + self.run.checkpoints + [self.run.end]
        self.states = cps
        self.times = np.array([s.t for s in cps])
        self.norms = np.array([s.norm() for s in cps])
        self.sample_L = self.run.localization_many(self.sample_times)

    def restart(self, threshold: float, t_final: float) -> Optional[ModeState]:
        """State to resume from for a trajectory with this threshold, or None if it never jumps."""
        if self.run.state_at(t_final).norm() > threshold:
            return None
        below = np.flatnonzero(self.norms <= threshold)
        k = (below[0] - 1) if below.size else len(self.states) - 1
        return self.states[max(k, 0)]


@dataclass
class TrajectoryResult:
    state: ModeState
    L: np.ndarray
    jumps: List[Tuple[float, float]]


def run_trajectory(
    p: MaskParams,
    t_final: float,
    rng: np.random.Generator,
    sample_times=None,
    tol: float = DEFAULT_TOL,
    branch: Optional[NoJumpBranch] = None,
    n_max: int = START_NMAX,
    density_time: Optional[float] = None,
) -> TrajectoryResult:
    """One quantum trajectory from the ground-state plane wave at -5 sigma_t.

    Returns the localization factor of the normalized state at each of
    ``sample_times`` (all <= t_final) and the normalized state at
    ``density_time``, which must be ``t_final`` or one of the sample times.
    """
    sign = p.sign
    times = np.array([t_final] if sample_times is None else sample_times, dtype=float)
    if times.size and times[-1] > t_final:
        raise ValueError("sample times must not exceed t_final")
    t_d = t_final if density_time is None else float(density_time)
    if t_d != t_final and t_d not in times:
        raise ValueError("density time must be t_final or a sample time")
    L = np.full(len(times), np.nan)
    kept = None
    eps = draw_epsilon(rng)

    if branch is not None:
        if not np.array_equal(branch.sample_times, times):
            raise ValueError("branch was built for different sample times")
        start = branch.restart(1.0 - eps, t_final)
        if start is None:
            final = branch.run.state_at(t_d).normalized()
            return TrajectoryResult(final, branch.sample_L.copy(), [])
        done = times < start.t
        L[done] = branch.sample_L[done]
        if t_d < start.t:
            kept = branch.run.state_at(t_d).normalized()
    else:
        start = init_uniform_ground(n_max, p.pulse_start)

    traj = TrajectoryState(start, eps)
    while True:
        found = detect_jump(traj, p, t_final, tol, times[np.isnan(L)])
        for s in found.samples:
            L[np.searchsorted(times, s.t)] = quantum_localization(s, sign)
            if s.t == t_d:
                kept = s.normalized()
        if found.time is None:
            traj = found.trajectory
            break
        k_prime = sample_photon_momentum(rng.random())
        traj = collapse(found.trajectory, k_prime, draw_epsilon(rng))
    if t_d == t_final:
        kept = traj.state.normalized()
    return TrajectoryResult(kept, L, traj.jumps)


@dataclass
class EnsembleResult:
    """Trajectory-averaged density and localization statistics."""

    density: DensityProfile
    trace: LocalizationTrace
    L: float
    stderr: float
    t_min: float
    L_min: float
    stderr_min: float
    trajectories: int
    mean_jumps: float
    L_samples: np.ndarray = field(repr=False, default=None)


def _chunk_job(job):
    p, t, times, x_samples, tol, base_seed, indices, branch = job
    Ls = np.empty((len(indices), len(times)))
    dens = np.zeros(x_samples)
    jumps = 0
    for row, idx in enumerate(indices):
        rng = trajectory_stream(base_seed, idx)
        res = run_trajectory(p, times[-1], rng, times, tol, branch, density_time=t)
        Ls[row] = res.L
        dens += density_from_modes(res.state, x_samples).P
        jumps += len(res.jumps)
    return Ls, dens, jumps


def _parabolic_vertex(ts, ys, i):
    if i == 0 or i == len(ts) - 1:
        return float(ts[i])
    x0, x1, x2 = ts[i - 1 : i + 2]
    y0, y1, y2 = ys[i - 1 : i + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a <= 0:
        return float(ts[i])
    return float(min(max(-b / (2 * a), x0), x2))


def _coherent_ensemble(p, n_traj, t, times, x_samples, tol):
    # Without decay no trajectory jumps: every member is the coherent solution.
    run = ModeRun(p, checkpoints=times, tol=tol)
    trace = run.trace(times)
    trace.stderr = np.zeros(len(times))
    i = int(np.argmin(trace.values))
    trace.t_min = _parabolic_vertex(times, trace.values, i)
    trace.L_min = float(trace.values[i])
    return EnsembleResult(
        density=density_from_modes(run.state_at(t), x_samples),
        trace=trace,
        L=float(trace.values[np.searchsorted(times, t)]),
        stderr=0.0,
        t_min=trace.t_min,
        L_min=trace.L_min,
        stderr_min=0.0,
        trajectories=n_traj,
        mean_jumps=0.0,
        L_samples=np.broadcast_to(trace.values, (n_traj, len(times))),
    )


def ensemble_density(
    p: MaskParams,
    n_traj: int = DEFAULT_TRAJECTORIES,
    t: float = 0.0,
    base_seed: int = 0,
    times=None,
    x_samples: int = 256,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
    bootstrap: int = BOOTSTRAP_RESAMPLES,
    use_branch: bool = True,
) -> EnsembleResult:
    """Average ``n_traj`` trajectories; density at ``t``, L at ``times`` (and ``t``).

    L values are means of the
    per-trajectory localization factors, which equals the localization of
    the averaged density because both are linear in the trajectory
    densities.  Standard errors come from a bootstrap over trajectories.
    With ``p.gamma == 0`` no trajectory can jump and the coherent solution is
    returned directly (zero standard error).
    """
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    times = np.union1d(np.asarray([t] if times is None else times, dtype=float), [t])
    if p.gamma == 0.0:
        return _coherent_ensemble(p, n_traj, t, times, x_samples, tol)
    branch = NoJumpBranch(p, times, tol) if use_branch else None
    chunks = [list(range(i, min(i + CHUNK, n_traj))) for i in range(0, n_traj, CHUNK)]
    jobs = [(p, t, times, x_samples, tol, base_seed, c, branch) for c in chunks]
    parts = ordered_map(_chunk_job, jobs, workers)

    Ls = np.concatenate([a for a, _, _ in parts], axis=0)
    dens = np.zeros(x_samples)
    jumps = 0
    for _, d, j in parts:
        dens += d
        jumps += j
    dens /= n_traj
    x = -0.25 + 0.5 * np.arange(x_samples) / x_samples
    profile = DensityProfile(x, dens, float(t), "recoil")

    mean_L = Ls.mean(axis=0)
    err = np.zeros(len(times))
    if n_traj > 1 and bootstrap > 0:
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(base_seed, spawn_key=(_BOOTSTRAP_KEY,)))
        )
        boots = np.empty((bootstrap, len(times)))
        for b in range(bootstrap):
            boots[b] = Ls[rng.integers(0, n_traj, n_traj)].mean(axis=0)
        err = boots.std(axis=0, ddof=1)
    i = int(np.argmin(mean_L))
    k = int(np.searchsorted(times, t))
    trace = LocalizationTrace(times, mean_L, "recoil", stderr=err)
    trace.t_min = _parabolic_vertex(times, mean_L, i)
    trace.L_min = float(mean_L[i])
    return EnsembleResult(
        density=profile,
        trace=trace,
        L=float(mean_L[k]),
        stderr=float(err[k]),
        t_min=trace.t_min,
        L_min=trace.L_min,
        stderr_min=float(err[i]),
        trajectories=n_traj,
        mean_jumps=jumps / n_traj,
        L_samples=Ls,
    )
