"""Optimal squeezing times, detuning scans and paraxial focal estimates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import classical, quantum
from ._parallel import ordered_map
from .core import T_REVIVAL, MaskParams
from .errors import AtomLensError, WindowTooNarrow, ZeroDetuning
from .profiles import LocalizationTrace

TIERS = ("classical-thin", "classical-thick", "quantum", "mcwf")
CLASSICAL_SAMPLES = 2000
TIE_TOL = 1e-6
# local minima this close to the best grid value are refined as well
CANDIDATE_MARGIN = 0.02


def focal_length(p: MaskParams, convention: str = "recoil") -> float:
    """Paraxial thick-lens focal time (the v_z factor of the focal length is dropped).

    ``recoil``: (pi / 2 Omega0) sqrt(Delta) for blue and
    (pi / 2 Omega0) sqrt(sqrt(Delta^2 + Omega0^2)) for red detuning, with
    ``sigma_t`` unused.  ``scaled``: the same time in classical scaled units,
    reading ``sigma_t`` as the scaled-unit pulse width; ``omega0`` drops out.
    """
    r = p.detuning_ratio
    if r == 0:
        raise ZeroDetuning("focal length needs the sign of the detuning")
    scale = abs(r) if r > 0 else math.sqrt(1.0 + r * r)
    if convention == "recoil":
        return 0.5 * math.pi / p.omega0 * math.sqrt(scale * p.omega0)
    if convention == "scaled":
        return 0.5 * math.pi * math.sqrt(scale * p.sigma_t)
    raise ValueError(f"unknown time convention {convention!r}")


def _refine(trace: LocalizationTrace, j: int):
    ts, ys = trace.times, trace.values
    if trace.evaluate is None:
        t = _parabola(ts, ys, j)
        return t, float(ys[j]) if t == ts[j] else _parabola_value(ts, ys, j, t)
    a, c = ts[j - 1], ts[j + 1]
    res = minimize_scalar(
        trace.evaluate, bounds=(a, c), method="bounded", options={"xatol": 1e-6 * (c - a)}
    )
    if res.fun <= ys[j]:
        return float(res.x), float(res.fun)
    return float(ts[j]), float(ys[j])


def _parabola(ts, ys, j):
    x0, x1, x2 = ts[j - 1 : j + 2]
    y0, y1, y2 = ys[j - 1 : j + 2]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a <= 0:
        return float(x1)
    return float(min(max(-b / (2 * a), x0), x2))


def _parabola_value(ts, ys, j, t):
    coef = np.polyfit(ts[j - 1 : j + 2], ys[j - 1 : j + 2], 2)
    return float(np.polyval(coef, t))


def find_minimum(trace: LocalizationTrace, refine: bool = True):
    """Global minimum (t_m, L_min) of a sampled trace.

    Grid local minima within 0.02 of the best sample are refined with a
    bounded golden-section/parabolic search on the trace's solver (or a
    parabola through the neighbours when the trace has no solver).  Minima
    equal within 1e-6 resolve to the earliest time.  Raises WindowTooNarrow
    when the best sample lies on the edge of the window.
    """
    ys = trace.values
    if len(ys) < 3:
        raise ValueError("trace needs at least three samples")
    best = float(np.min(ys))
    first = int(np.flatnonzero(ys <= best + TIE_TOL)[0])
    if first == 0 or np.argmin(ys) == len(ys) - 1:
        edge = "left" if first == 0 else "right"
        raise WindowTooNarrow(f"minimum on the {edge} edge of the window", edge=edge)
    interior = np.arange(1, len(ys) - 1)
    is_min = (ys[interior] <= ys[interior - 1]) & (ys[interior] <= ys[interior + 1])
    cands = [int(j) for j in interior[is_min] if ys[j] <= best + CANDIDATE_MARGIN]
    if not refine:
        cands = [first]
    results = [_refine(trace, j) if refine else (float(trace.times[j]), float(ys[j])) for j in cands]
    low = min(v for _, v in results)
    t_m, L_min = min((r for r in results if r[1] <= low + TIE_TOL), key=lambda r: r[0])
    trace.t_min, trace.L_min = t_m, L_min
    return t_m, L_min


def _with_expansion(build, lo, hi, expand):
    """Build the trace on [lo, hi]; on an edge hit, widen once and retry."""
    trace = build(lo, hi)
    try:
        find_minimum(trace)
        return trace
    except WindowTooNarrow as exc:
        lo, hi = expand(lo, hi, exc.edge)
    trace = build(lo, hi)
    find_minimum(trace)
    return trace


def optimize_classical_thin(r: float, n: int = classical.DEFAULT_PARTICLES, samples: int = CLASSICAL_SAMPLES):
    """Thin-lens trace over [0, W] (scaled time) with its refined minimum."""

    def build(lo, hi):
        return classical.thin_lens_trace(r, np.linspace(lo, hi, samples), n)

    def expand(lo, hi, edge):
        if edge == "left":
            raise WindowTooNarrow("thin-lens minimum at the kick time", edge=edge)
        return lo, 2 * hi

    return _with_expansion(build, 0.0, classical.thin_lens_window(r), expand)


def classical_thick_window(p: MaskParams):
    return -p.sigma_t, p.sigma_t + 3.0 * focal_length(p, "scaled")


def optimize_classical_thick(
    p: MaskParams,
    n: int = classical.DEFAULT_PARTICLES,
    samples: int = CLASSICAL_SAMPLES,
    tol: float = classical.DEFAULT_TOL,
    workers: int = 1,
):
    def build(lo, hi):
        return classical.thick_lens_trace(p, np.linspace(lo, hi, samples), n, tol, workers)

    def expand(lo, hi, edge):
        width = hi - lo
        if edge == "left":
            return max(p.pulse_start, lo - width), hi
        return lo, hi + width

    lo, hi = classical_thick_window(p)
    return _with_expansion(build, lo, hi, expand)


def optimize_quantum(p: MaskParams, samples: int = quantum.TRACE_SAMPLES, tol: float = quantum.DEFAULT_TOL):
    """Coherent trace over [-sigma_t, t_R] (recoil time) with its refined minimum."""
    run = {}

    def build(lo, hi):
        times = np.linspace(lo, hi, samples)
        run["run"] = quantum.ModeRun(p, checkpoints=times, tol=tol)
        return run["run"].trace(times)

    def expand(lo, hi, edge):
        if edge == "left":
            return p.pulse_start, hi
        return lo, hi + T_REVIVAL

    trace = _with_expansion(build, -p.sigma_t, T_REVIVAL, expand)
    trace.run = run["run"]
    return trace


def mcwf_window(t_m: float, sigma_t: float, points: int = 41):
    """Symmetric grid around a coherent optimum for the trajectory ensembles."""
    half = max(0.25 * abs(t_m), 0.1 * sigma_t)
    return np.linspace(t_m - half, t_m + half, points)


@dataclass
class ScanRow:
    r: float
    t_m: float = float("nan")
    L_min: float = float("nan")
    stderr: float = 0.0
    error: Optional[str] = None


@dataclass
class ScanResult:
    rows: List[ScanRow]
    tier: str
    params: dict = field(default_factory=dict)

    @property
    def r(self):
        return np.array([row.r for row in self.rows])

    @property
    def L_min(self):
        return np.array([row.L_min for row in self.rows])

    @property
    def t_m(self):
        return np.array([row.t_m for row in self.rows])

    def to_dict(self):
        return {"tier": self.tier, "params": self.params, "rows": [asdict(r) for r in self.rows]}


def default_detunings(points: int = 40, lo: float = 0.05, hi: float = 10.0) -> np.ndarray:
    """Log-spaced ratios on both sides of resonance, r = 0 excluded."""
    mags = np.geomspace(lo, hi, points)
    return np.concatenate([-mags[::-1], mags])


def _scan_row(job):
    r, tier, sigma_t, omega0, gamma, options = job
    row = ScanRow(float(r))
    try:
        if tier == "classical-thin":
            tr = optimize_classical_thin(r, **options)
        elif tier == "classical-thick":
            tr = optimize_classical_thick(MaskParams(omega0, sigma_t, r), **options)
        elif tier == "quantum":
            tr = optimize_quantum(MaskParams(omega0, sigma_t, r), **options)
        elif tier == "mcwf":
            from .mcwf import ensemble_density

            p = MaskParams(omega0, sigma_t, r, gamma)
            coherent = optimize_quantum(p.replace(gamma=0.0))
            times = mcwf_window(coherent.t_min, sigma_t)
            res = ensemble_density(p, t=times[-1], times=times, **options)
            row.t_m, row.L_min, row.stderr = res.t_min, res.L_min, res.stderr_min
            return row
        else:
            raise ValueError(f"unknown solver tier {tier!r}")
        row.t_m, row.L_min = tr.t_min, tr.L_min
    except (AtomLensError, ValueError, ArithmeticError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def scan_detuning(
    rs,
    tier: str,
    sigma_t: float,
    omega0: float = 1.0,
    gamma: float = 0.0,
    workers: int = 1,
    **options,
) -> ScanResult:
    """Optimal (t_m, L_min) for every detuning ratio in ``rs``.

    ``tier`` selects the solver.  A failing row keeps its error message and
    the scan carries on.  Rows run as independent tasks.
    """
    if tier not in TIERS:
        raise ValueError(f"tier must be one of {TIERS}")
    rs = [float(r) for r in rs]
    if any(r == 0 for r in rs):
        raise ZeroDetuning("scan ratios must be nonzero")
    jobs = [(r, tier, sigma_t, omega0, gamma, options) for r in rs]
    rows = ordered_map(_scan_row, jobs, workers)
    params = {"sigma_t": sigma_t, "omega0": omega0, "gamma": gamma, **options}
    return ScanResult(rows, tier, params)
