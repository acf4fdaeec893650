import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from atomlens import quantum
from atomlens.core import T_REVIVAL, MaskParams
from atomlens.errors import ToleranceNotMet, TruncationOverflow
from atomlens.quantum import ModeState


def _random_ground(n_max, t, seed=3):
    rng = np.random.default_rng(seed)
    c_g = rng.normal(size=2 * n_max + 1) + 1j * rng.normal(size=2 * n_max + 1)
    c_g /= np.linalg.norm(c_g)
    return ModeState(np.zeros_like(c_g), c_g, 0.0, t)


def test_initial_state():
    s = quantum.init_uniform_ground(8, t=-1.0)
    assert s.norm() == 1.0
    assert s.excited_population() == 0.0
    assert quantum.quantum_localization(s, 1) == 1.0
    assert len(s.chain()) == 4 * 8 + 2


def test_chain_round_trip_and_extension():
    s = _random_ground(6, 0.0)
    back = ModeState.from_chain(s.chain(), s.p0, s.t)
    assert np.array_equal(back.c_g, s.c_g)
    big = s.extended(12)
    assert big.n_max == 12 and big.norm() == pytest.approx(1.0)
    assert quantum.quantum_localization(big, 1) == pytest.approx(quantum.quantum_localization(s, 1))


def test_local_two_level_oracle(monkeypatch):
    # Without kinetic energy each position is an independent two-level atom
    # driven by Omega(t) cos(x); compare amplitudes at a few positions.
    p = MaskParams(60.0, 0.05, 0.3)
    real_energies = quantum.chain_energies

    def internal_only(n_max, p0, params):
        q = np.arange(-2 * n_max, 2 * n_max + 2, dtype=float)
        return real_energies(n_max, p0, params) - (p0 + q) ** 2

    monkeypatch.setattr(quantum, "chain_energies", internal_only)
    start = quantum.init_uniform_ground(64, p.pulse_start)
    final = quantum.evolve_modes(start, p, p.pulse_end, tol=1e-12)

    d = p.detuning
    for x in (0.0, 0.4, 1.1, 2.0):

        def rhs(t, y):
            om = p.omega0 * math.exp(-(t / p.sigma_t) ** 2) * math.cos(x)
            g, e = y
            return [-1j * (0.5 * d * g + 0.5 * om * e), -1j * (-0.5 * d * e + 0.5 * om * g)]

        sol = solve_ivp(rhs, (p.pulse_start, p.pulse_end), [1 + 0j, 0j], method="DOP853", rtol=1e-12, atol=1e-14)
        g_ref, e_ref = sol.y[:, -1]
        n = final.n
        psi_g = np.sum(final.c_g * np.exp(2j * n * x))
        psi_e = np.sum(final.c_e * np.exp(1j * (2 * n + 1) * x))
        assert psi_g == pytest.approx(g_ref, abs=1e-8)
        assert psi_e == pytest.approx(e_ref, abs=1e-8)


def test_revival_fidelity():
    p = MaskParams(1.92e5, 6e-4, 0.125)
    s = _random_ground(32, p.pulse_end + 0.1)
    later = quantum.evolve_modes(s, p, s.t + T_REVIVAL)
    overlap = abs(np.vdot(s.chain(), later.chain()))
    assert overlap == pytest.approx(1.0, abs=1e-10)


def test_norm_conserved_without_decay(thick_blue):
    run = quantum.ModeRun(thick_blue, checkpoints=np.linspace(-0.05, 0.05, 11))
    for s in run.checkpoints + [run.end]:
        assert abs(s.norm() - 1.0) <= 1e-8
    assert abs(run.state_at(0.7).norm() - 1.0) <= 1e-8


def test_decay_reduces_norm():
    p = MaskParams(4e4, 0.01, -0.125, gamma=238.0)
    run = quantum.ModeRun(p)
    assert run.end.norm() < 1.0
    assert run.state_at(0.1).norm() <= run.end.norm()


def test_density_quadrature_matches_mode_sum(thick_blue):
    run = quantum.ModeRun(thick_blue)
    for t in (0.0, 0.005, 0.2):
        s = run.state_at(t)
        dens = quantum.density_from_modes(s, 512)
        assert dens.localization(1) == pytest.approx(quantum.quantum_localization(s, 1), abs=1e-6)
        # direct reconstruction of the wave function
        kx = 2 * np.pi * dens.x
        n = s.n
        psi_g = np.exp(1j * np.outer(kx, 2 * n)) @ s.c_g
        psi_e = np.exp(1j * np.outer(kx, 2 * n + 1)) @ s.c_e
        raw = np.abs(psi_g) ** 2 + np.abs(psi_e) ** 2
        assert np.allclose(dens.P, raw / raw.mean(), atol=1e-12)
        assert dens.integral() == pytest.approx(1.0)


def test_adiabatic_reference_agrees(thick_blue):
    times = [0.0, 2.5e-3, 5e-3, 7.5e-3]
    ref = quantum.adiabatic_reference_trace(thick_blue, times)
    modes = quantum.quantum_trace(thick_blue, times)
    assert np.max(np.abs(ref.values - modes.values)) <= 0.02
    prof = quantum.adiabatic_reference_evolve(thick_blue, 5e-3)
    assert prof.localization(1) == pytest.approx(ref.values[2], abs=1e-3)


def test_adiabatic_reference_reports_unconverged():
    p = MaskParams(4e4, 0.01, 1.0)
    with pytest.raises(ToleranceNotMet):
        quantum.adiabatic_reference_evolve(p, 0.0, dt=1e-3, tol=1e-14, max_halvings=1)
    with pytest.raises(ValueError):
        quantum.adiabatic_reference_evolve(p.replace(gamma=1.0), 0.0)


def test_mode_range_grows_automatically(thick_blue):
    small = quantum.ModeRun(thick_blue, n_max=4)
    big = quantum.ModeRun(thick_blue, n_max=64)
    assert small.n_max > 4
    for t in (0.0, 5e-3):
        assert small.localization(t) == pytest.approx(big.localization(t), abs=1e-7)


def test_truncation_overflow(monkeypatch, thick_blue):
    monkeypatch.setattr(quantum, "MAX_NMAX", 8)
    with pytest.raises(TruncationOverflow):
        quantum.ModeRun(thick_blue, n_max=4)


def test_post_pulse_trace_matches_direct_evolution(thin_red):
    run = quantum.ModeRun(thin_red)
    times = np.array([0.004, 0.007, 0.3])
    fast = run.localization_many(times)
    for t, v in zip(times, fast):
        s = quantum.evolve_modes(run.end, thin_red, t)
        assert v == pytest.approx(quantum.quantum_localization(s, -1), abs=1e-10)


def test_state_at_inside_pulse_uses_checkpoints(thin_red):
    cps = np.linspace(-0.001, 0.001, 5)
    run = quantum.ModeRun(thin_red, checkpoints=cps)
    assert run.state_at(cps[2]) is run.checkpoints[2]
    fresh = quantum.evolve_modes(quantum.init_uniform_ground(64, thin_red.pulse_start), thin_red, 0.0005)
    assert quantum.quantum_localization(run.state_at(0.0005), -1) == pytest.approx(
        quantum.quantum_localization(fresh, -1), abs=1e-8
    )
