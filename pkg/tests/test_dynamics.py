import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qbattery import analytic
from qbattery.dynamics import (
    EnergyTrace, default_horizon, energy_trace, find_first_peak, integrate_moments, refine_peak,
)
from qbattery.errors import DomainError
from qbattery.model import CONSTANT, POWER_LAW, STEP, QuenchProtocol, SystemParams

# E_B = |<b>|^2 with F = omega0 = 1, frozen from tests/oracles.battery_amplitude_quad
# (direct Duhamel quadrature on the ramp, g_f = 1, tau_Q = 100).
FROZEN_RAMP = [
    (1.0, 21.0, 281.22691554868555),
    (2.0, 30.0, 331.7404728110813),
    (0.5, 12.0, 67.36323823645276),
]


def test_default_horizon():
    assert default_horizon(QuenchProtocol(g_f=2.0, tau_Q=10.0)) == pytest.approx(10.0 + 3 * math.pi)
    with pytest.raises(DomainError):
        default_horizon(QuenchProtocol(g_f=0.0))


def test_constant_coupling_matches_closed_form():
    p = SystemParams(F=0.3)
    q = QuenchProtocol.constant(g_f=1.3)
    tr = energy_trace(integrate_moments(p, q, horizon=4 * math.pi, n_out=801, tol=1e-11))
    exact = analytic.energy_constant_coupling(p, 1.3, tr.times)
    assert np.max(np.abs(tr.E_B - exact)) <= 1e-8 * exact.max()


@pytest.mark.parametrize("r,t,expected", FROZEN_RAMP)
def test_ramp_energy_matches_quadrature(r, t, expected):
    q = QuenchProtocol.power_law(r, 1.0, 100.0)
    tr = energy_trace(integrate_moments(SystemParams(F=1.0), q, horizon=t, n_out=3, tol=1e-12))
    assert tr.E_B[-1] == pytest.approx(expected, rel=1e-8)


def test_step_ramp_charger_only_before_tau():
    p = SystemParams(F=0.5)
    q = QuenchProtocol.step(1.0, 10.0)
    traj = integrate_moments(p, q, horizon=20.0, n_out=201, tol=1e-11)
    before = traj.times <= 10.0
    assert np.all(traj.b_amp[before] == 0)
    # free drive: <a> = -i F t
    np.testing.assert_allclose(traj.a_amp[before], -1j * 0.5 * traj.times[before], atol=1e-10)
    assert np.abs(traj.b_amp[-1]) > 0.1


def test_zero_drive_zero_energy():
    tr = energy_trace(integrate_moments(SystemParams(F=0.0), QuenchProtocol(tau_Q=20.0), n_out=101))
    assert not tr.E_A.any() and not tr.E_B.any()
    assert tr.peak is None


def test_bad_arguments():
    p, q = SystemParams(), QuenchProtocol()
    with pytest.raises(DomainError):
        integrate_moments(p, q, horizon=-1.0)
    with pytest.raises(DomainError):
        integrate_moments(p, q, n_out=1)
    with pytest.raises(DomainError):
        integrate_moments(p, q, tol=1e-16)


protocols = st.builds(
    lambda ramp, r, tau, g: QuenchProtocol(g_f=g, tau_Q=tau, ramp=ramp, r=r),
    st.sampled_from([POWER_LAW, CONSTANT, STEP]),
    st.floats(0.25, 4.0),
    st.floats(1.0, 60.0),
    st.floats(0.2, 2.0),
)


@given(q=protocols, a0=st.complex_numbers(max_magnitude=2.0), b0=st.complex_numbers(max_magnitude=2.0))
def test_number_conserved_without_drive_or_loss(q, a0, b0):
    tol = 1e-10
    traj = integrate_moments(SystemParams(F=0.0), q, horizon=q.tau_Q + 10.0, n_out=51, tol=tol, initial=(a0, b0))
    n = np.abs(traj.a_amp) ** 2 + np.abs(traj.b_amp) ** 2
    n0 = abs(a0) ** 2 + abs(b0) ** 2
    assert np.max(np.abs(n - n0)) <= 10 * tol * max(n0, 1.0)


@given(q=protocols, gamma=st.floats(0.01, 1.0))
def test_loss_only_drains(q, gamma):
    traj = integrate_moments(SystemParams(F=0.0, gamma=gamma), q, horizon=q.tau_Q + 10.0, n_out=51,
                             initial=(1.0, 0.5j))
    n = np.abs(traj.a_amp) ** 2 + np.abs(traj.b_amp) ** 2
    assert np.all(np.diff(n) <= 1e-9)


@given(q=protocols, scale=st.floats(0.1, 10.0))
def test_amplitudes_linear_in_drive(q, scale):
    h = q.tau_Q + 5.0
    one = integrate_moments(SystemParams(F=0.01), q, horizon=h, n_out=41, tol=1e-12)
    many = integrate_moments(SystemParams(F=0.01 * scale), q, horizon=h, n_out=41, tol=1e-12)
    ref = max(np.abs(one.b_amp).max(), np.abs(one.a_amp).max())
    assert np.max(np.abs(many.b_amp - scale * one.b_amp)) <= 1e-9 * scale * ref
    assert np.max(np.abs(many.a_amp - scale * one.a_amp)) <= 1e-9 * scale * ref


def test_find_first_peak_parabola():
    t = np.linspace(0.0, 10.0, 101)
    y = np.sin(t) ** 2
    pk = find_first_peak(EnergyTrace(t, y, y, y))
    assert pk.t_m == pytest.approx(math.pi / 2, abs=2e-3)
    assert pk.E_Bm == pytest.approx(1.0, abs=1e-4)
    assert find_first_peak(EnergyTrace(t, t, t, t)) is None
    assert find_first_peak(EnergyTrace(t, y, y, y), floor=2.0) is None


def test_refine_peak_on_dense_output():
    p = SystemParams(F=1.0)
    q = QuenchProtocol.constant(1.0)
    traj = integrate_moments(p, q, horizon=2 * math.pi, n_out=33, tol=1e-12)
    coarse = energy_trace(traj).peak
    fine = refine_peak(traj, coarse)
    assert abs(fine.t_m - math.pi) < abs(coarse.t_m - math.pi) or abs(coarse.t_m - math.pi) < 1e-9
    assert fine.t_m == pytest.approx(math.pi, abs=1e-6)
    assert fine.E_Bm == pytest.approx(4.0, rel=1e-10)
