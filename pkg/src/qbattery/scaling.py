"""Quench-duration sweeps and log-log power-law fits of the peak quantities."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import analytic
from .dynamics import default_horizon, energy_trace, integrate_moments, refine_peak
from .errors import DomainError, FitError, RegimeError, SweepError, UnsupportedError
from .model import CONSTANT, POWER_LAW, QuenchProtocol, SystemParams

ODE = "ode"
CLOSED_FORM = "closed"
METHODS = (ODE, CLOSED_FORM)

OK = "ok"
NO_PEAK = "no_peak"

SAMPLES_PER_PERIOD = 64


@dataclass(frozen=True)
class SweepRow:
    tau_Q: float
    t_m: float
    E_Bm: float
    P_Bm: float
    source: str
    status: str = OK

    @property
    def ok(self) -> bool:
        return self.status == OK


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    r_squared: float
    window: tuple
    n_points: int
    slope_stderr: float = 0.0


def log_grid(lo: float, hi: float, per_decade: int = 12) -> np.ndarray:
    """Log-spaced grid from lo to hi inclusive with ``per_decade`` points per decade."""
    if not 0 < lo < hi:
        raise DomainError(f"need 0 < lo < hi, got {lo}, {hi}")
    n = max(int(round(math.log10(hi / lo) * per_decade)), 2) + 1
    return np.logspace(math.log10(lo), math.log10(hi), n)


def _ode_point(params, protocol, tol):
    horizon = default_horizon(protocol)
    for attempt in range(2):
        n_out = int(math.ceil(horizon * protocol.g_f / (2 * math.pi) * SAMPLES_PER_PERIOD)) + 1
        traj = integrate_moments(params, protocol, horizon, max(n_out, 257), tol)
        trace = energy_trace(traj)
        if trace.peak is not None:
            pk = refine_peak(traj, trace.peak)
            return SweepRow(protocol.tau_Q, pk.t_m, pk.E_Bm, pk.P_Bm, ODE)
        horizon *= 4.0
    nan = float("nan")
    return SweepRow(protocol.tau_Q, nan, nan, nan, ODE, NO_PEAK)


def _closed_point(params, protocol):
    if protocol.ramp == CONSTANT:
        pk = analytic.constant_coupling_peak(params, protocol.g_f)
    else:
        try:
            pk = analytic.peak_prediction(params, protocol)
        except RegimeError:
            nan = float("nan")
            return SweepRow(protocol.tau_Q, nan, nan, nan, CLOSED_FORM, "regime")
    return SweepRow(protocol.tau_Q, pk.t_m, pk.E_Bm, pk.P_Bm, CLOSED_FORM)


def _sweep_point(args):
    params, protocol, method, tol = args
    if method == ODE:
        return _ode_point(params, protocol, tol)
    return _closed_point(params, protocol)


def sweep_tauq(
    params: SystemParams,
    protocol: QuenchProtocol,
    grid: Sequence[float],
    method: str = ODE,
    jobs: int = 1,
    tol: float = 1e-10,
) -> list[SweepRow]:
    """Peak time, energy and power for each quench duration in ``grid``.

    ``protocol`` supplies the ramp shape and g_f; its tau_Q is replaced per
    grid point.  Rows come back in grid order whatever ``jobs`` is.  A point
    without a detected peak is retried once on a 4x horizon and then kept as
    a ``no_peak`` row.
    """
    grid = [float(t) for t in grid]
    if len(grid) < 3:
        raise DomainError(f"sweep needs at least 3 grid points, got {len(grid)}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("sweep grid must be strictly ascending")
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    if method == CLOSED_FORM:
        if params.gamma != 0:
            raise UnsupportedError("closed-form sweeps need gamma = 0")
        if protocol.ramp not in (POWER_LAW, CONSTANT):
            raise UnsupportedError("closed-form sweeps cover power-law and constant ramps")

    tasks = [(params, protocol.with_tau(t), method, tol) for t in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    if not any(r.ok for r in rows):
        raise SweepError("no grid point produced a peak")
    return rows


def fit_power_law(rows: Sequence[SweepRow], field: str = "P_Bm", window=None) -> ScalingFit:
    """Ordinary least squares of log(field) against log(tau_Q) within ``window``."""
    if field not in ("E_Bm", "P_Bm", "t_m"):
        raise DomainError(f"cannot fit field {field!r}")
    lo, hi = window if window is not None else (-math.inf, math.inf)
    pts = [
        (r.tau_Q, getattr(r, field))
        for r in rows
        if r.ok and lo * (1 - 1e-9) <= r.tau_Q <= hi * (1 + 1e-9) and getattr(r, field) > 0
    ]
    if len(pts) < 3:
        raise FitError(f"need >= 3 usable rows inside window {window}, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    if np.ptp(x) == 0:
        raise FitError("degenerate window: all tau_Q equal")
    res = stats.linregress(x, y)
    r2 = float(res.rvalue**2) if np.ptp(y) > 0 else 1.0
    taus = [p[0] for p in pts]
    return ScalingFit(
        float(res.slope), float(res.intercept), min(max(r2, 0.0), 1.0),
        (min(taus), max(taus)), len(pts), float(res.stderr),
    )


def detect_rolloff(rows: Sequence[SweepRow]) -> Optional[float]:
    """tau_Q of maximal peak power, refined by a parabola in (log tau, log P).

    ``None`` when the maximum sits at either end of the grid (no interior peak).
    """
    good = sorted((r for r in rows if r.ok and r.P_Bm > 0), key=lambda r: r.tau_Q)
    if len(good) < 3:
        return None
    p = np.array([r.P_Bm for r in good])
    j = int(np.argmax(p))
    if j == 0 or j == len(good) - 1:
        return None
    x = np.log([good[j - 1].tau_Q, good[j].tau_Q, good[j + 1].tau_Q])
    y = np.log(p[j - 1:j + 2])
    a, b, _ = np.polyfit(x, y, 2)
    if a >= 0:
        return good[j].tau_Q
    return float(np.exp(np.clip(-b / (2 * a), x[0], x[2])))


def count_interior_peaks(rows: Sequence[SweepRow]) -> int:
    """Number of interior local maxima of P_Bm along the grid."""
    p = [r.P_Bm for r in sorted(rows, key=lambda r: r.tau_Q) if r.ok]
    return sum(1 for i in range(1, len(p) - 1) if p[i] > p[i - 1] and p[i] > p[i + 1])


__all__ = [
    "SweepRow", "ScalingFit", "log_grid", "sweep_tauq", "fit_power_law",
    "detect_rolloff", "count_interior_peaks", "ODE", "CLOSED_FORM",
]
