"""First-moment dynamics of the driven charger/battery pair.

With both modes starting in vacuum the quadratic, linearly driven model keeps
them in coherent states, so the mean amplitudes

    d<a>/dt = -i (g(t) <b> + F) - gamma/2 <a>
    d<b>/dt = -i g(t) <a>

carry the full energetics: E_A = omega0 |<a>|^2 and E_B = omega0 |<b>|^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DivergenceError, DomainError, StiffnessError
from .model import POWER_LAW, QuenchProtocol, SystemParams, piece_coupling, pieces
from .specfun import maximize_scalar

LOCAL_TOL_RADIANS = 10.0
MIN_LOCAL_RTOL = 1e-13


class Peak(NamedTuple):
    t_m: float
    E_Bm: float
    P_Bm: float


@dataclass(frozen=True)
class Trajectory:
    params: SystemParams
    protocol: QuenchProtocol
    times: np.ndarray
    a_amp: np.ndarray
    b_amp: np.ndarray
    integrator_tol: float
    atol: float = 0.0
    # piecewise dense interpolant t -> [<a>, <b>]; not part of equality
    dense: Optional[Callable] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class EnergyTrace:
    times: np.ndarray
    E_A: np.ndarray
    E_B: np.ndarray
    P_B: np.ndarray
    peak: Optional[Peak] = None


def default_horizon(protocol: QuenchProtocol) -> float:
    """tau_Q plus three post-quench coupling periods."""
    if not protocol.g_f > 0:
        raise DomainError("default horizon needs g_f > 0; pass an explicit horizon")
    return protocol.tau_Q + 6.0 * math.pi / protocol.g_f


def _rhs_factory(params: SystemParams, protocol: QuenchProtocol, on_ramp: bool):
    F = params.F
    half_gamma = 0.5 * params.gamma
    coupling = piece_coupling(protocol, on_ramp)

    def rhs(t, y):
        g = coupling(t)
        a, b = y[0], y[1]
        return np.array([-1j * (g * b + F) - half_gamma * a, -1j * g * a])

    return rhs


class _PiecewiseDense:
    def __init__(self, bounds, sols):
        self.bounds = bounds
        self.sols = sols

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.bounds[1:-1], t, side="right")
        out = np.empty((2,) + t.shape, dtype=complex)
        for j, sol in enumerate(self.sols):
            mask = idx == j
            if np.any(mask):
                out[:, mask] = sol(t[mask])
        return out


def integrate_moments(
    params: SystemParams,
    protocol: QuenchProtocol,
    horizon: Optional[float] = None,
    n_out: int = 2001,
    tol: float = 1e-10,
    initial=(0.0, 0.0),
) -> Trajectory:
    """Integrate the mean-amplitude equations on [0, horizon].

    An adaptive 8(5,3) Dormand-Prince pair runs separately on the ramp and on
    the plateau so no step straddles tau_Q; its dense output is sampled on a
    uniform grid of ``n_out`` points.  ``initial`` defaults to the vacuum.

    ``tol`` targets the accuracy of the whole trajectory: the per-step
    tolerance is ``tol`` divided by (coupling radians / 10), floored at 1e-13.
    """
    if horizon is None:
        horizon = default_horizon(protocol)
    if not horizon > 0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    if int(n_out) < 2:
        raise DomainError(f"n_out must be >= 2, got {n_out}")
    if not 1e-14 < tol < 1e-3:
        raise DomainError(f"tol must lie in (1e-14, 1e-3), got {tol}")

    y = np.array(initial, dtype=complex)
    scale = max(float(np.max(np.abs(y))), params.F / protocol.g_f if protocol.g_f > 0 else params.F * horizon)
    # Local error accumulates roughly linearly in the number of coupling
    # radians; tighten the per-step target so the global error stays near tol.
    radians = horizon * max(protocol.g_f, 0.5 * params.gamma)
    rtol = max(tol / max(1.0, radians / LOCAL_TOL_RADIANS), MIN_LOCAL_RTOL)
    # zero drive from vacuum has no natural amplitude scale; any unit works
    atol = rtol * scale if scale > 0 else rtol

    segments = pieces(protocol, horizon)
    sols = []
    for j, (t0, t1, on_ramp) in enumerate(segments):
        rhs = _rhs_factory(params, protocol, on_ramp)
        opts = {}
        if j == 0 and protocol.ramp == POWER_LAW and protocol.r < 1:
            opts["first_step"] = min(protocol.tau_Q * 1e-6, t1 - t0)
        res = solve_ivp(rhs, (t0, t1), y, method="DOP853", rtol=rtol, atol=atol, dense_output=True, **opts)
        if not np.all(np.isfinite(res.y)):
            raise DivergenceError("non-finite amplitude encountered", t=float(res.t[-1]))
        if res.status != 0:
            t_fail = float(res.t[-1])
            raise StiffnessError(f"integration stalled at t={t_fail}: {res.message}", t=t_fail)
        sols.append(res.sol)
        y = res.y[:, -1]

    dense = _PiecewiseDense(np.array([0.0] + [seg[1] for seg in segments]), sols)
    times = np.linspace(0.0, horizon, int(n_out))
    amps = dense(times)
    amps[:, 0] = np.asarray(initial, dtype=complex)
    return Trajectory(params, protocol, times, amps[0], amps[1], tol, atol, dense)


def energy_trace(traj: Trajectory) -> EnergyTrace:
    """Charger/battery energies and average battery power along a trajectory."""
    w0 = traj.params.omega0
    E_A = w0 * np.abs(traj.a_amp) ** 2
    E_B = w0 * np.abs(traj.b_amp) ** 2
    P_B = np.zeros_like(E_B)
    pos = traj.times > 0
    P_B[pos] = E_B[pos] / traj.times[pos]
    trace = EnergyTrace(traj.times, E_A, E_B, P_B)
    # maxima below the integrator's absolute tolerance are not resolved
    floor = w0 * (100.0 * traj.atol) ** 2
    return EnergyTrace(traj.times, E_A, E_B, P_B, find_first_peak(trace, floor=floor))


def _first_local_max(y: np.ndarray, floor: float = 0.0) -> Optional[int]:
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] > y[2:]) & (y[1:-1] > floor)
    hits = np.flatnonzero(inner)
    return int(hits[0]) + 1 if hits.size else None


def find_first_peak(trace: EnergyTrace, floor: float = 0.0) -> Optional[Peak]:
    """Earliest interior local maximum of E_B, refined by a parabola through
    the three bracketing samples.  ``None`` when E_B has no interior maximum.

    Local maxima not exceeding ``floor`` are ignored.
    """
    t, y = np.asarray(trace.times), np.asarray(trace.E_B)
    if len(y) < 3:
        return None
    i = _first_local_max(y, floor)
    if i is None:
        return None
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2.0 * y1 + y2
    h = t[i + 1] - t[i]
    p = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    t_m = t[i] + p * h
    E_m = y1 - 0.25 * (y0 - y2) * p
    return Peak(float(t_m), float(E_m), float(E_m / t_m))


def refine_peak(traj: Trajectory, peak: Peak, tol: float = 1e-9) -> Peak:
    """Re-locate a grid peak on the integrator's dense output (no new solves)."""
    if traj.dense is None:
        return peak
    h = traj.times[1] - traj.times[0]
    lo = max(peak.t_m - 1.5 * h, 0.0)
    hi = min(peak.t_m + 1.5 * h, traj.times[-1])
    w0 = traj.params.omega0

    def e_b(t):
        return w0 * abs(traj.dense(np.array([t]))[1, 0]) ** 2

    t_m, E_m = maximize_scalar(e_b, (lo, hi), tol=tol * max(1.0, peak.t_m), n_grid=7)
    return Peak(float(t_m), float(E_m), float(E_m / t_m))
