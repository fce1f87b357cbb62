"""Closed-form charging results, used as fast paths and as integrator oracles.

Power-law ramp, lossless charger: with Phi(t) = k t^(1+r)/(1+r) the accumulated
coupling phase, the battery amplitude is real,

    <b>(t) = -F int_0^t sin(Phi(t) - Phi(s)) ds
           = -F t/(1+r) Im[ e^{ix} int_0^1 v^-alpha e^{-ixv} dv ],   x = Phi(t),

and splitting int_0^1 = int_0^inf - int_1^inf turns the bracket into
Gamma(1-alpha) (ix)^(alpha-1) - conj(E_alpha(ix)).
"""
from __future__ import annotations

import cmath
import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DomainError, RegimeError, UnsupportedError
from .model import POWER_LAW, QuenchProtocol, SystemParams
from .specfun import fresnel, gen_exp_integral, lambert_w_branch_minus1, maximize_scalar


class PeakPrediction(NamedTuple):
    theta_m: float
    t_m: float
    E_Bm: float
    P_Bm: float


def _require_lossless(params: SystemParams, what: str):
    if params.gamma != 0:
        raise UnsupportedError(f"{what} has no closed form for gamma != 0; integrate the dynamics instead")


def energy_constant_coupling(params: SystemParams, g_f: float, t):
    """Battery energy 4 omega0 F^2/g_f^2 sin^4(g_f t/2) under constant coupling."""
    _require_lossless(params, "constant-coupling energy")
    if not g_f > 0:
        raise DomainError(f"g_f must be positive, got {g_f}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be nonnegative")
    out = 4.0 * params.omega0 * params.F**2 / g_f**2 * np.sin(0.5 * g_f * t) ** 4
    return float(out) if out.ndim == 0 else out


def constant_coupling_peak(params: SystemParams, g_f: float) -> PeakPrediction:
    """First maximum of the constant-coupling energy, reached at t = pi/g_f."""
    _require_lossless(params, "constant-coupling peak")
    E = 4.0 * params.omega0 * params.F**2 / g_f**2
    t_m = math.pi / g_f
    return PeakPrediction(g_f * t_m, t_m, E, E / t_m)


def _ramp_bracket(alpha: float, x: float) -> float:
    # Im[e^{ix} (Gamma(1-alpha) (ix)^(alpha-1) - conj E_alpha(ix))]
    full = math.gamma(1.0 - alpha) * cmath.exp(1j * math.pi * (alpha - 1.0) / 2.0) * x ** (alpha - 1.0)
    head = full - gen_exp_integral(alpha, x).conjugate()
    return (cmath.exp(1j * x) * head).imag


def energy_quench_closed(params: SystemParams, protocol: QuenchProtocol, t):
    """Battery energy on a lossless power-law ramp, for 0 <= t <= tau_Q."""
    _require_lossless(params, "ramp energy")
    if protocol.ramp != POWER_LAW:
        raise DomainError("closed-form ramp energy needs a power-law ramp")
    r = protocol.r
    alpha = r / (r + 1.0)
    k = protocol.k

    def one(tt):
        if not 0.0 <= tt <= protocol.tau_Q:
            raise DomainError(f"closed form holds on the ramp [0, {protocol.tau_Q}], got t={tt}")
        if tt == 0.0:
            return 0.0
        x = k * tt ** (1.0 + r) / (1.0 + r)
        return params.omega0 * (params.F * tt / (1.0 + r)) ** 2 * _ramp_bracket(alpha, x) ** 2

    ts = np.asarray(t, dtype=float)
    if ts.ndim == 0:
        return one(float(ts))
    return np.array([one(float(v)) for v in ts])


@lru_cache(maxsize=None)
def peak_phase(r: float) -> float:
    """theta_m = k t_m^(1+r) at the first energy maximum of a slow power-law ramp.

    Depends on r only: in units of the ramp, E_B ~ theta^(2/(1+r)) bracket^2.
    """
    if not r > 0:
        raise DomainError(f"r must be positive, got {r}")
    alpha = r / (r + 1.0)

    def shape(th):
        return th ** (2.0 / (1.0 + r)) * _ramp_bracket(alpha, th / (1.0 + r)) ** 2

    hi = (1.0 + r) * 2.0 * math.pi
    th, _ = maximize_scalar(shape, (1e-3, hi), tol=1e-12, n_grid=400, first=True)
    return th


def peak_prediction(params: SystemParams, protocol: QuenchProtocol) -> PeakPrediction:
    """Closed-form first peak (theta_m, t_m, E_Bm, P_Bm) of a lossless power-law ramp."""
    _require_lossless(params, "peak prediction")
    if protocol.ramp != POWER_LAW:
        raise DomainError("peak prediction needs a power-law ramp")
    r = protocol.r
    th = peak_phase(r)
    t_m = (th / protocol.k) ** (1.0 / (1.0 + r))
    if t_m > protocol.tau_Q:
        raise RegimeError(
            f"predicted peak t_m={t_m:.6g} lies past tau_Q={protocol.tau_Q:.6g}; "
            "the quench is too fast for the ramp closed form, use the dynamics module"
        )
    E = energy_quench_closed(params, protocol, t_m)
    return PeakPrediction(float(th), float(t_m), float(E), float(E / t_m))


def fresnel_peak_residuals(theta_m: float) -> dict:
    """Residuals of the linear-ramp Fresnel peak condition under three readings.

    Left side (C^2 - S^2)/(2 C S) at z = sqrt(theta_m/pi); right sides
    cot(theta_m^2/2), cot(theta_m/2) and cot(theta_m).  For theta_m = k t_m^2
    the one that vanishes is cot(theta_m).
    """
    C, S = fresnel(math.sqrt(theta_m / math.pi))
    lhs = (C * C - S * S) / (2.0 * C * S)
    return {
        "cot(theta^2/2)": lhs - 1.0 / math.tan(theta_m**2 / 2.0),
        "cot(theta/2)": lhs - 1.0 / math.tan(theta_m / 2.0),
        "cot(theta)": lhs - 1.0 / math.tan(theta_m),
    }


def charger_energy_decoupled(params: SystemParams, t):
    """Charger energy 4 omega0 F^2/gamma^2 (e^{-gamma t/2} - 1)^2 with the coupling off."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be nonnegative")
    g = params.gamma
    if g == 0:
        out = params.omega0 * params.F**2 * t**2
    else:
        # expm1 keeps the small-gamma*t limit free of cancellation
        out = 4.0 * params.omega0 * params.F**2 / g**2 * np.expm1(-0.5 * g * t) ** 2
    return float(out) if out.ndim == 0 else out


def power_scaling_step(params: SystemParams, tau_Q):
    """Normalized step-quench power shape (e^{-gamma tau/2} - 1)^2 / (tau gamma^2).

    Proportional to the peak battery power only up to an unspecified constant.
    """
    g = params.gamma
    if not g > 0:
        raise DomainError(f"needs gamma > 0, got {g}")
    tau = np.asarray(tau_Q, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("tau_Q must be positive")
    out = np.expm1(-0.5 * g * tau) ** 2 / (tau * g**2)
    return float(out) if out.ndim == 0 else out


def optimal_tauq_step(gamma: float) -> float:
    """Maximizer of ``power_scaling_step``: tau = 2x/gamma with e^x = 1 + 2x.

    Closed form -(2 W_-1(-1/(2 sqrt e)) + 1) / gamma.
    """
    if not gamma > 0:
        raise DomainError(f"needs gamma > 0, got {gamma}")
    w = lambert_w_branch_minus1(-0.5 * math.exp(-0.5))
    return -(2.0 * w + 1.0) / gamma


def optimal_tauq_as_printed(gamma: float) -> float:
    """|W_-1(-1/(2 sqrt e)) + 1| / gamma, kept for comparison with the maximizer."""
    return abs(lambert_w_branch_minus1(-0.5 * math.exp(-0.5)) + 1.0) / gamma


__all__ = [
    "PeakPrediction",
    "energy_constant_coupling",
    "constant_coupling_peak",
    "energy_quench_closed",
    "peak_phase",
    "peak_prediction",
    "fresnel_peak_residuals",
    "charger_energy_decoupled",
    "power_scaling_step",
    "optimal_tauq_step",
    "optimal_tauq_as_printed",
]
