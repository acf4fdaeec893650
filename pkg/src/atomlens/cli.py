"""Command line front end: ``atomlens <subcommand> [flags]``.

Configuration comes from built-in defaults, an optional JSON file
(``--config run.json``, keys are RunConfig field names) and command line
flags, in increasing order of precedence.  Every run writes its CSV tables
and a JSON manifest into the output directory: ``--output-dir``, else the
config file, else ``$ATOMLENS_OUTPUT_DIR``, else ``./atomlens-output``.

Exit status: 0 success, 1 configuration error, 2 solver error, 3 a
reproduced figure missed its caption targets.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import _io, classical, quantum
from .core import MaskParams
from .errors import AtomLensError, ComparisonFailed, ConfigError, WindowTooNarrow
from .optimize import (
    CLASSICAL_SAMPLES,
    TIERS,
    default_detunings,
    find_minimum,
    mcwf_window,
    optimize_classical_thick,
    optimize_classical_thin,
    optimize_quantum,
    scan_detuning,
)

ENV_OUTPUT_DIR = "ATOMLENS_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "atomlens-output"
COMMANDS = TIERS + ("scan", "reproduce-figure")
MCWF_SAMPLES = 41


@dataclass
class RunConfig:
    """Everything needed to repeat a run.  ``None`` means "tier default"."""

    command: Optional[str] = None
    omega0: float = 1.0
    sigma_t: Optional[float] = None
    detuning_ratio: Optional[float] = None
    gamma: float = 0.0
    t_start: Optional[float] = None
    t_end: Optional[float] = None
    samples: Optional[int] = None
    density_time: Optional[float] = None
    particles: int = classical.DEFAULT_PARTICLES
    n_traj: int = 5000
    bootstrap: int = 200
    x_samples: int = 256
    tol: Optional[float] = None
    base_seed: int = 0
    output_dir: Optional[str] = None
    workers: int = 1
    scan_tier: str = "quantum"
    scan_points: int = 40
    scan_min: float = 0.05
    scan_max: float = 10.0
    scan_ratios: Optional[List[float]] = None
    figure: Optional[int] = None

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def validate(self) -> "RunConfig":
        problems = {}
        cmd = self.command
        if cmd not in COMMANDS:
            problems["command"] = f"must be one of {', '.join(COMMANDS)}"
        needs_mask = cmd in TIERS
        if needs_mask or cmd == "scan":
            if self.sigma_t is None:
                problems["sigma_t"] = "required"
            elif not self.sigma_t > 0:
                problems["sigma_t"] = "must be positive"
        if needs_mask:
            if self.detuning_ratio is None:
                problems["detuning_ratio"] = "required"
            elif self.detuning_ratio == 0:
                problems["detuning_ratio"] = "must be nonzero (the detuning sign selects the potential)"
        if not self.omega0 > 0:
            problems["omega0"] = "must be positive"
        if self.gamma < 0:
            problems["gamma"] = "must be non-negative"
        if cmd in ("classical-thin", "classical-thick", "quantum") and self.gamma:
            problems["gamma"] = "decay is only modelled by the mcwf solver"
        if (self.t_start is None) != (self.t_end is None):
            problems["t_start"] = "t_start and t_end must be given together"
        elif self.t_start is not None and not self.t_end > self.t_start:
            problems["t_end"] = "must exceed t_start"
        for name, low in (("samples", 3), ("particles", 64), ("n_traj", 1), ("x_samples", 64), ("workers", 1)):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < low):
                problems[name] = f"must be an integer >= {low}"
        if self.bootstrap < 0:
            problems["bootstrap"] = "must be non-negative"
        if self.tol is not None and not 0 < self.tol < 1:
            problems["tol"] = "must lie in (0, 1)"
        if cmd == "scan":
            if self.scan_tier not in TIERS:
                problems["scan_tier"] = f"must be one of {', '.join(TIERS)}"
            if self.scan_ratios is not None and any(r == 0 for r in self.scan_ratios):
                problems["scan_ratios"] = "ratios must be nonzero"
            if not 0 < self.scan_min < self.scan_max:
                problems["scan_min"] = "need 0 < scan_min < scan_max"
            if self.scan_points < 2:
                problems["scan_points"] = "need at least 2 points per sign"
        if cmd == "reproduce-figure" and self.figure not in range(2, 12):
            problems["figure"] = "must be one of 2..11"
        if problems:
            raise ConfigError(problems)
        return self

    def resolved(self) -> dict:
        """Config with every tier default filled in, as written to the manifest."""
        d = asdict(self)
        tier = self.scan_tier if self.command == "scan" else self.command
        if d["samples"] is None:
            d["samples"] = {"quantum": quantum.TRACE_SAMPLES, "mcwf": MCWF_SAMPLES}.get(tier, CLASSICAL_SAMPLES)
        if d["tol"] is None:
            d["tol"] = classical.DEFAULT_TOL if tier and tier.startswith("classical") else quantum.DEFAULT_TOL
        d["output_dir"] = str(output_dir(self))
        return d

    def params(self) -> MaskParams:
        return MaskParams(self.omega0, self.sigma_t, self.detuning_ratio, self.gamma)


def output_dir(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir or os.environ.get(ENV_OUTPUT_DIR) or DEFAULT_OUTPUT_DIR)


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError({"config": f"cannot read {path}: {exc.strerror}"}) from None
    except json.JSONDecodeError as exc:
        raise ConfigError({"config": f"{path} is not valid JSON: {exc}"}) from None
    if not isinstance(data, dict):
        raise ConfigError({"config": "top level must be an object"})
    unknown = sorted(set(data) - set(RunConfig.field_names()))
    if unknown:
        raise ConfigError({k: "unknown field" for k in unknown})
    return data


def build_config(file_values: dict, flag_values: dict) -> RunConfig:
    """Merge defaults < file < flags and validate."""
    merged = {**file_values, **flag_values}
    problems = {}
    for f in fields(RunConfig):
        if f.name not in merged or merged[f.name] is None:
            continue
        v = merged[f.name]
        default = getattr(RunConfig, f.name, None)
        try:
            if f.name == "scan_ratios":
                merged[f.name] = [float(x) for x in v]
            elif f.name in ("command", "output_dir", "scan_tier"):
                merged[f.name] = str(v)
            elif isinstance(default, int) or f.name in ("samples", "figure"):
                if isinstance(v, bool) or float(v) != int(float(v)):
                    raise ValueError
                merged[f.name] = int(float(v))
            else:
                if isinstance(v, bool):
                    raise ValueError
                merged[f.name] = float(v)
        except (TypeError, ValueError, OverflowError):
            problems[f.name] = f"invalid value {v!r}"
    if problems:
        raise ConfigError(problems)
    return RunConfig(**merged).validate()


# -- pipelines -----------------------------------------------------------------


def _window_trace(build, cfg, times):
    trace = build(times)
    try:
        find_minimum(trace)
    except WindowTooNarrow as exc:
        # user supplied window: report the edge sample instead of failing
        i = int(np.argmin(trace.values))
        trace.t_min, trace.L_min = float(trace.times[i]), float(trace.values[i])
        print(f"warning: {exc}", file=sys.stderr)
    return trace


def _times(cfg, res):
    return np.linspace(cfg.t_start, cfg.t_end, res["samples"])


def _run_classical(cfg: RunConfig, res: dict, out: Path):
    thin = cfg.command == "classical-thin"
    p = cfg.params()
    n, tol, workers = cfg.particles, res["tol"], cfg.workers
    if cfg.t_start is not None:
        if thin:
            build = lambda ts: classical.thin_lens_trace(cfg.detuning_ratio, ts, n)
        else:
            build = lambda ts: classical.thick_lens_trace(p, ts, n, tol, workers)
        trace = _window_trace(build, cfg, _times(cfg, res))
    elif thin:
        trace = optimize_classical_thin(cfg.detuning_ratio, n=n, samples=res["samples"])
    else:
        trace = optimize_classical_thick(p, n=n, samples=res["samples"], tol=tol, workers=workers)
    t_d = trace.t_min if cfg.density_time is None else cfg.density_time
    if thin:
        ens = classical.evolve_thin(classical.thin_lens_ensemble(cfg.detuning_ratio, n), t_d)
    else:
        ens = classical.thick_lens_ensemble(p, t_d, n, tol, workers)
    dens = classical.classical_density(ens, cfg.x_samples)
    return trace, dens, {"density_time": t_d}


def _run_quantum(cfg: RunConfig, res: dict, out: Path):
    p = cfg.params()
    tol = res["tol"]
    if cfg.t_start is not None:
        times = _times(cfg, res)
        run = quantum.ModeRun(p, checkpoints=times, tol=tol)
        trace = _window_trace(run.trace, cfg, times)
    else:
        trace = optimize_quantum(p, samples=res["samples"], tol=tol)
        run = trace.run
    t_d = trace.t_min if cfg.density_time is None else cfg.density_time
    dens = quantum.density_from_modes(run.state_at(t_d), cfg.x_samples)
    return trace, dens, {"density_time": t_d, "n_max": run.n_max}


def _run_mcwf(cfg: RunConfig, res: dict, out: Path):
    from .mcwf import ensemble_density

    p = cfg.params()
    tol = res["tol"]
    if cfg.t_start is not None:
        times = _times(cfg, res)
    else:
        coherent = optimize_quantum(p.replace(gamma=0.0), tol=tol)
        times = mcwf_window(coherent.t_min, p.sigma_t, res["samples"])
    t_d = times[len(times) // 2] if cfg.density_time is None else cfg.density_time
    ens = ensemble_density(
        p,
        cfg.n_traj,
        t_d,
        cfg.base_seed,
        times,
        cfg.x_samples,
        tol,
        cfg.workers,
        cfg.bootstrap,
    )
    extra = {
        "density_time": t_d,
        "stderr_min": ens.stderr_min,
        "stderr": ens.trace.stderr,
        "mean_jumps": ens.mean_jumps,
    }
    return ens.trace, ens.density, extra


def _run_scan(cfg: RunConfig, res: dict):
    if cfg.scan_ratios is not None:
        rs = cfg.scan_ratios
    else:
        rs = default_detunings(cfg.scan_points, cfg.scan_min, cfg.scan_max)
    tier = cfg.scan_tier
    options = {}
    if tier.startswith("classical"):
        options["n"] = cfg.particles
        options["samples"] = res["samples"]
    if tier == "classical-thick":
        options["tol"] = res["tol"]
    if tier == "quantum":
        options.update(samples=res["samples"], tol=res["tol"])
    if tier == "mcwf":
        options.update(n_traj=cfg.n_traj, base_seed=cfg.base_seed, tol=res["tol"], bootstrap=cfg.bootstrap)
    return scan_detuning(rs, tier, cfg.sigma_t, cfg.omega0, cfg.gamma, cfg.workers, **options)


def run(cfg: RunConfig) -> List[Path]:
    """Execute one validated configuration and write its outputs."""
    res = cfg.resolved()
    out = output_dir(cfg)
    start = time.perf_counter()
    cmd = cfg.command

    if cmd == "reproduce-figure":
        from .figures import reproduce_figure

        fig_opts = {
            "workers": cfg.workers,
            "n_traj": cfg.n_traj,
            "base_seed": cfg.base_seed,
        }
        result = reproduce_figure(cfg.figure, out, raise_on_failure=False, config=res, **fig_opts)
        print(result.report())
        if not result.passed:
            raise ComparisonFailed(result.failures())
        return result.outputs

    if cmd == "scan":
        scan = _run_scan(cfg, res)
        path = _io.write_scan(out / f"scan_{cfg.scan_tier}.csv", scan)
        errors = {f"{row.r:g}": row.error for row in scan.rows if row.error}
        manifest = _io.write_manifest(
            out / f"scan_{cfg.scan_tier}_manifest.json",
            res,
            [path],
            time.perf_counter() - start,
            {"errors": errors},
        )
        for row in scan.rows:
            line = f"r={row.r:+.4g} t_m={row.t_m:.6g} L_min={row.L_min:.6g}"
            print(line + (f" error: {row.error}" if row.error else ""))
        return [path, manifest]

    runner = {"classical-thin": _run_classical, "classical-thick": _run_classical, "quantum": _run_quantum, "mcwf": _run_mcwf}[cmd]
    trace, dens, extra = runner(cfg, res, out)
    convention = "scaled" if cmd.startswith("classical") else "recoil"
    paths = [
        _io.write_trace(out / f"{cmd}_trace.csv", trace),
        _io.write_density(out / f"{cmd}_density.csv", dens),
    ]
    summary = {"t_m": trace.t_min, "L_min": trace.L_min, "time_convention": convention, **extra}
    paths.append(_io.write_manifest(out / f"{cmd}_manifest.json", res, paths, time.perf_counter() - start, summary))
    print(f"t_m={trace.t_min:.6g} L_min={trace.L_min:.6g} ({convention} time units)")
    return paths


# -- argument parsing -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError({"arguments": message})


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", default=S, help="JSON file with RunConfig fields")
    g.add_argument("--omega0", type=float, default=S, help="peak Rabi frequency (recoil units, default 1)")
    g.add_argument("--sigma-t", dest="sigma_t", type=float, default=S, help="pulse width")
    g.add_argument("--r", "--detuning-ratio", dest="detuning_ratio", type=float, default=S, help="Delta / Omega0")
    g.add_argument("--gamma", type=float, default=S, help="spontaneous decay rate (mcwf only)")
    g.add_argument("--t-start", dest="t_start", type=float, default=S, help="trace window start")
    g.add_argument("--t-end", dest="t_end", type=float, default=S, help="trace window end")
    g.add_argument("--samples", type=int, default=S, help="trace samples")
    g.add_argument("--density-time", dest="density_time", type=float, default=S, help="density snapshot time (default t_m)")
    g.add_argument("--particles", type=int, default=S, help="classical ensemble size (4096)")
    g.add_argument("--n-traj", dest="n_traj", type=int, default=S, help="Monte Carlo trajectories (5000)")
    g.add_argument("--bootstrap", type=int, default=S, help="bootstrap resamples (200)")
    g.add_argument("--x-samples", dest="x_samples", type=int, default=S, help="density samples per period (256)")
    g.add_argument("--tol", type=float, default=S, help="integrator relative tolerance")
    g.add_argument("--base-seed", dest="base_seed", type=int, default=S, help="Monte Carlo base seed (0)")
    g.add_argument("--output-dir", dest="output_dir", default=S, help=f"output directory (${ENV_OUTPUT_DIR})")
    g.add_argument("--workers", type=int, default=S, help="worker processes (1)")

    parser = _Parser(prog="atomlens", description="Atom focusing by a pulsed standing-wave light mask.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "classical-thin": "classical thin-lens L(t) and density (scaled time units)",
        "classical-thick": "classical thick-lens L(t) and density (scaled time units)",
        "quantum": "coherent mode-expansion L(t) and density (recoil time units)",
        "mcwf": "Monte Carlo wave-function ensemble with spontaneous emission",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    sp = sub.add_parser("scan", parents=[common], help="optimal L_min and t_m over detuning ratios")
    sp.add_argument("--tier", dest="scan_tier", choices=TIERS, default=S, help="solver (quantum)")
    sp.add_argument("--points", dest="scan_points", type=int, default=S, help="log-spaced points per sign (40)")
    sp.add_argument("--r-min", dest="scan_min", type=float, default=S, help="smallest |r| (0.05)")
    sp.add_argument("--r-max", dest="scan_max", type=float, default=S, help="largest |r| (10)")
    sp.add_argument("--ratios", dest="scan_ratios", type=_floats, default=S, help="explicit comma separated ratios")
    fp = sub.add_parser("reproduce-figure", parents=[common], help="run a figure preset and compare with its caption")
    fp.add_argument("figure", type=int, help="figure number 2..11")
    return parser


def main(argv=None) -> int:
    try:
        ns = vars(build_parser().parse_args(argv))
        path = ns.pop("config", None)
        file_values = load_config_file(path) if path else {}
        cfg = build_config(file_values, ns)
        for p in run(cfg):
            print(p)
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except ComparisonFailed as exc:
        print("comparison failed:", file=sys.stderr)
        for line in exc.failures:
            print(f"  {line}", file=sys.stderr)
        return 3
    except (AtomLensError, ArithmeticError, ValueError) as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
