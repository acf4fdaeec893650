"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Caption values are compared at +/-0.02 on L and +/-5% on t_m (deterministic
solvers) and +/-0.03 on L for Monte Carlo ensembles of 5000 trajectories.
The full suite takes roughly half an hour on one core.
"""

import time

import numpy as np
import pytest

from atomlens import classical, figures, mcwf, quantum
from atomlens.core import T_REVIVAL, MaskParams


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def _report(capsys, number, title, ok, details):
    line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'} {title}"
    with capsys.disabled():
        print("\n" + line)
        for d in details:
            print(f"      {d}")
    return ok


def _figures(capsys, number, title, figs, outdir, budget=None):
    start = time.perf_counter()
    results = [figures.reproduce_figure(f, outdir, raise_on_failure=False) for f in figs]
    elapsed = time.perf_counter() - start
    details = [f"fig {r.figure}: {c.line()}" for r in results for c in r.checks]
    ok = all(r.passed for r in results)
    if budget is not None:
        fast = elapsed < budget
        details.append(f"{'PASS' if fast else 'FAIL'} runtime {elapsed:.1f} s (limit {budget:g} s)")
        ok = ok and fast
    assert _report(capsys, number, title, ok, details)


def test_criterion_01_classical_thin_lens(capsys, outdir):
    _figures(capsys, 1, "classical thin lens", [2], outdir, budget=10)


def test_criterion_02_classical_thick_lens(capsys, outdir):
    _figures(capsys, 2, "classical thick lens", [4], outdir, budget=60)


def test_criterion_03_classical_detuning_scans(capsys, outdir):
    _figures(capsys, 3, "classical detuning scan asymptotes", [3], outdir)


def test_criterion_04_quantum_thin_lens(capsys, outdir):
    _figures(capsys, 4, "quantum thin lens", [5, 6], outdir, budget=600)


def test_criterion_05_quantum_thick_lens(capsys, outdir):
    _figures(capsys, 5, "quantum thick lens", [8], outdir)


def test_criterion_06_red_side_agreement(capsys):
    q, c = figures.red_side_agreement()
    details = []
    ok = True
    for qr, cr in zip(q.rows, c.rows):
        diff = abs(qr.L_min - cr.L_min)
        good = bool(np.isfinite(diff) and diff <= figures.L_TOL)
        ok &= good
        details.append(
            f"{'PASS' if good else 'FAIL'} r={qr.r:+.4g}: quantum {qr.L_min:.4f} classical {cr.L_min:.4f} |diff| {diff:.4f}"
        )
    assert _report(capsys, 6, "quantum vs classical red-side scan", ok, details)


def test_criterion_07_mcwf_thin_lens(capsys, outdir):
    _figures(capsys, 7, "Monte Carlo thin lens", [10], outdir, budget=7200)


def test_criterion_08_mcwf_thick_lens(capsys, outdir):
    _figures(capsys, 8, "Monte Carlo thick lens", [11], outdir)


def _property_checks():
    checks = []

    def add(label, ok, value):
        checks.append((label, bool(ok), value))

    # norm without decay through a thick pulse
    thick = MaskParams(4e4, 0.01, 1.0)
    run = quantum.ModeRun(thick, checkpoints=np.linspace(-0.05, 0.05, 21))
    drift = max(abs(s.norm() - 1.0) for s in run.checkpoints + [run.end, run.state_at(0.5)])
    add("norm conservation (gamma = 0) <= 1e-8", drift <= 1e-8, drift)

    # revival of a ground-state superposition after t_R
    rng = np.random.default_rng(0)
    c_g = rng.normal(size=129) + 1j * rng.normal(size=129)
    c_g /= np.linalg.norm(c_g)
    psi = quantum.ModeState(np.zeros_like(c_g), c_g, 0.0, thick.pulse_end)
    later = quantum.evolve_modes(psi, thick, psi.t + T_REVIVAL)
    fid = abs(np.vdot(psi.chain(), later.chain()))
    add("revival fidelity |1 - F| <= 1e-10", abs(fid - 1) <= 1e-10, fid)

    # photon recoil sampler
    v = mcwf.sample_photon_momentum(np.random.default_rng(1).random(1_000_000))
    add("sampler mean |<k'/k>| <= 1e-2", abs(v.mean()) <= 1e-2, v.mean())
    m2 = np.mean(v**2)
    add("sampler <(k'/k)^2> = 0.4 +/- 1e-2", abs(m2 - 0.4) <= 1e-2, m2)

    # thick lens reduces to the thin lens for a short pulse
    worst = 0.0
    for r in (-0.125, 0.125, 5.0):
        p = MaskParams(1.0, 1e-3, r)
        ens = classical.thick_lens_ensemble(p, p.pulse_end, n=512, tol=1e-10)
        kick = classical.thin_lens_kick(ens.x0, r)
        worst = max(worst, np.linalg.norm(ens.v - kick) / np.linalg.norm(kick))
    add("thin/thick velocity relative error <= 1e-3 (sigma_t = 1e-3)", worst <= 1e-3, worst)

    # mode-sum localization against density quadrature
    err = 0.0
    for t in (0.0, 5e-3, 0.3):
        s = run.state_at(t)
        err = max(err, abs(quantum.density_from_modes(s, 512).localization(1) - quantum.quantum_localization(s, 1)))
    add("mode sum vs density quadrature <= 1e-6", err <= 1e-6, err)

    # independent adiabatic split-step solver at the thick-lens parameters
    times = [0.0, 1.5e-3, 3e-3, 5.3e-3, 7.5e-3]
    diff = 0.0
    for r in (-0.125, 0.125, 1.0):
        p = MaskParams(4e4, 0.01, r)
        diff = max(diff, np.max(np.abs(quantum.adiabatic_reference_trace(p, times).values - quantum.quantum_trace(p, times).values)))
    add("adiabatic cross-solver |dL| <= 0.02", diff <= 0.02, diff)

    # trajectories without decay reproduce the coherent solver
    thin = MaskParams(1.92e5, 6e-4, -0.125)
    ts = np.linspace(0.005, 0.009, 9)
    traj = mcwf.run_trajectory(thin, ts[-1], mcwf.trajectory_stream(0, 0), ts)
    d = np.max(np.abs(traj.L - quantum.quantum_trace(thin, ts).values))
    add("MCWF(gamma = 0) vs coherent <= 1e-8", d <= 1e-8 and not traj.jumps, d)

    # ensembles do not depend on the number of workers
    decaying = thin.replace(gamma=238.0)
    ts = np.linspace(0.006, 0.008, 5)
    saved = mcwf.CHUNK
    mcwf.CHUNK = 10
    try:
        a = mcwf.ensemble_density(decaying, 30, ts[2], 11, ts, workers=1, bootstrap=20)
        b = mcwf.ensemble_density(decaying, 30, ts[2], 11, ts, workers=3, bootstrap=20)
    finally:
        mcwf.CHUNK = saved
    same = np.array_equal(a.trace.values, b.trace.values) and np.array_equal(a.density.P, b.density.P)
    add("bitwise reproducibility across worker counts", same, same)
    return checks


def test_criterion_09_property_suite(capsys):
    start = time.perf_counter()
    checks = _property_checks()
    elapsed = time.perf_counter() - start
    details = [f"{'PASS' if ok else 'FAIL'} {label}: {value:.3g}" for label, ok, value in checks]
    fast = elapsed < 60
    details.append(f"{'PASS' if fast else 'FAIL'} runtime {elapsed:.1f} s (limit 60 s)")
    ok = all(c[1] for c in checks) and fast
    assert _report(capsys, 9, "property suite", ok, details)


def test_criterion_10_nonadiabatic_breakdown(capsys, outdir):
    _figures(capsys, 10, "non-adiabatic density peaks", [9], outdir)
