import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from atomlens import classical
from atomlens.core import MaskParams


def test_uniform_grid_is_unlocalized():
    x = classical.uniform_grid(1024)
    assert x.min() > -math.pi / 2 and x.max() < math.pi / 2
    assert classical.classical_localization(classical.static_ensemble(1, 1024)) == pytest.approx(1.0, abs=1e-12)
    assert classical.classical_localization(classical.static_ensemble(-1, 1024)) == pytest.approx(1.0, abs=1e-12)


def test_dimensional_newton_oracle():
    # Newton's law in recoil units, m = 1/2 and hbar = k = 1, with the force
    # from a finite-difference gradient of the dressed potential.
    omega0, sigma_phys, r = 1e4, 0.01, -0.3
    delta = r * omega0
    s = -1

    def potential(x, t):
        g = math.exp(-(t / sigma_phys) ** 2)
        return s * 0.5 * math.sqrt(delta**2 + (omega0 * g * math.cos(x)) ** 2)

    def rhs(t, y):
        h = 1e-6
        force = -(potential(y[0] + h, t) - potential(y[0] - h, t)) / (2 * h)
        return [y[1], force / 0.5]

    x0 = 0.7
    t_end = 8 * sigma_phys
    sol = solve_ivp(rhs, (-5 * sigma_phys, t_end), [x0, 0.0], method="DOP853", rtol=1e-12, atol=1e-13)
    # same motion in scaled units: tau = t * Omega0 * sigma, sigma_scaled = Omega0 sigma^2
    p = MaskParams(1.0, omega0 * sigma_phys**2, r)
    tau_end = t_end * omega0 * sigma_phys
    traj = classical.integrate_trajectory(x0, p, tau_end, tol=1e-12)
    assert traj.x[-1, 0] == pytest.approx(sol.y[0, -1], abs=1e-6)
    assert traj.v[-1, 0] * omega0 * sigma_phys == pytest.approx(sol.y[1, -1], rel=1e-6)


def test_energy_conserved_with_frozen_envelope():
    r, sigma, g = 0.4, 0.5, 0.8
    p = MaskParams(1.0, sigma, r)
    x0 = np.linspace(-1.4, 1.4, 9)
    times = np.linspace(0.0, 6.0, 7)
    traj = classical.integrate_trajectory(x0, p, 6.0, tol=1e-11, samples=times, envelope=lambda t: g, tau_start=0.0)
    energy = 0.5 * traj.v**2 + (p.sign / sigma) * np.sqrt(r * r + g * g * np.cos(traj.x) ** 2)
    assert np.max(np.abs(energy - energy[0])) < 1e-8


@pytest.mark.parametrize("r", [1e3, -1e3])
def test_far_detuned_kick(r):
    x0 = np.linspace(-1.5, 1.5, 31)
    kick = classical.thin_lens_kick(x0, r)
    sign = 1 if r > 0 else -1
    expected = sign * np.sin(2 * x0) * math.sqrt(math.pi / 2) / (2 * abs(r))
    assert np.allclose(kick, expected, rtol=1e-4, atol=1e-12)


@pytest.mark.parametrize("r", [-0.125, 0.125, 5.0])
def test_kick_matches_adaptive_quadrature(r):
    sign = 1 if r > 0 else -1
    for x0 in (-1.2, -0.3, 0.05, 0.9, 1.5):
        f = lambda u: 0.5 * math.exp(-2 * u * u) * math.sin(2 * x0) / math.sqrt(r * r + math.exp(-2 * u * u) * math.cos(x0) ** 2)
        ref, _ = quad(f, -3.0, 3.0, epsabs=1e-14, epsrel=1e-13)
        assert classical.thin_lens_kick(x0, r) == pytest.approx(sign * ref, abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(x0=st.floats(-3, 3), r=st.floats(0.02, 20), sign=st.sampled_from([1, -1]))
def test_kick_symmetries(x0, r, sign):
    rr = sign * r
    k = classical.thin_lens_kick(x0, rr)
    assert classical.thin_lens_kick(-x0, rr) == pytest.approx(-k, abs=1e-12)
    assert classical.thin_lens_kick(x0 + math.pi, rr) == pytest.approx(k, abs=1e-10)


@pytest.mark.parametrize("r", [-0.125, 0.125, 2.0])
def test_thick_reduces_to_thin_for_short_pulse(r):
    p = MaskParams(1.0, 1e-3, r)
    ens = classical.thick_lens_ensemble(p, p.pulse_end, n=256, tol=1e-10)
    kick = classical.thin_lens_kick(ens.x0, r)
    # relative error of the velocity vector; the residual is the O(sigma_t)
    # motion during the pulse that the thin lens neglects
    assert np.linalg.norm(ens.v - kick) <= 1e-3 * np.linalg.norm(kick)


def test_thin_trace_starts_unlocalized_and_focuses():
    times = np.linspace(0, 2, 201)
    tr = classical.thin_lens_trace(-0.125, times, n=2048)
    assert tr.values[0] == pytest.approx(1.0, abs=1e-12)
    assert tr.values.min() < 0.2
    assert tr.evaluate(times[50]) == pytest.approx(tr.values[50], abs=1e-14)


def test_thin_focal_time_positive():
    for r in (-2.0, -0.125, 0.125, 5.0):
        assert classical.thin_focal_time(r) > 0
        assert classical.thin_lens_window(r) >= 3 * classical.thin_focal_time(r)


def test_thick_trace_independent_of_workers():
    p = MaskParams(1.0, 4.0, 0.125)
    times = np.linspace(-4, 6, 21)
    a = classical.thick_lens_trace(p, times, n=512, workers=1)
    b = classical.thick_lens_trace(p, times, n=512, workers=2)
    assert np.array_equal(a.values, b.values)


def test_thick_trace_evaluate_matches_samples():
    p = MaskParams(1.0, 4.0, 1.0)
    times = np.linspace(-4, 6, 41)
    tr = classical.thick_lens_trace(p, times, n=512, tol=1e-10)
    assert tr.evaluate(times[23]) == pytest.approx(tr.values[23], abs=1e-8)
    mid = 0.5 * (times[23] + times[24])
    direct = classical.classical_localization(classical.thick_lens_ensemble(p, mid, n=512, tol=1e-10))
    assert tr.evaluate(mid) == pytest.approx(direct, abs=1e-8)


def test_density_normalization_and_localization():
    ens = classical.evolve_thin(classical.thin_lens_ensemble(-0.125, 4096), 0.8)
    dens = classical.classical_density(ens, bins=256)
    assert np.mean(dens.P) == pytest.approx(1.0)
    assert dens.integral() == pytest.approx(1.0)
    assert dens.x.min() >= -0.25 and dens.x.max() < 0.25
    assert dens.localization(-1) == pytest.approx(classical.classical_localization(ens), abs=2e-3)
    with pytest.raises(ValueError):
        classical.classical_density(ens, bins=8)
