"""Physical parameters and the coupling quench protocol.

Natural units throughout: hbar = 1, energies in units of ``omega0`` and
times in units of ``1/omega0`` unless a caller picks otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

POWER_LAW = "power"
CONSTANT = "constant"
STEP = "step"
RAMPS = (POWER_LAW, CONSTANT, STEP)


@dataclass(frozen=True)
class SystemParams:
    """Charger/battery frequency, charger drive and charger loss rate."""

    omega0: float = 1.0
    F: float = 0.01
    gamma: float = 0.0

    def __post_init__(self):
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise DomainError(f"omega0 must be positive, got {self.omega0}")
        if not (self.F >= 0 and math.isfinite(self.F)):
            raise DomainError(f"F must be nonnegative, got {self.F}")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise DomainError(f"gamma must be nonnegative, got {self.gamma}")


@dataclass(frozen=True)
class QuenchProtocol:
    """Coupling ramp g(t) reaching ``g_f`` at ``tau_Q`` and held afterwards.

    ``ramp`` is one of ``"power"`` (g_f (t/tau_Q)^r), ``"constant"``
    (g_f from t=0) or ``"step"`` (0 before tau_Q, g_f after).  ``r`` is only
    meaningful for the power-law ramp.
    """

    g_f: float = 1.0
    tau_Q: float = 100.0
    ramp: str = POWER_LAW
    r: float = 1.0

    def __post_init__(self):
        if self.ramp not in RAMPS:
            raise DomainError(f"unknown ramp {self.ramp!r}; expected one of {RAMPS}")
        if not (self.g_f >= 0 and math.isfinite(self.g_f)):
            raise DomainError(f"g_f must be nonnegative, got {self.g_f}")
        if not (self.tau_Q > 0 and math.isfinite(self.tau_Q)):
            raise DomainError(f"tau_Q must be positive, got {self.tau_Q}")
        if self.ramp == POWER_LAW and not (self.r > 0 and math.isfinite(self.r)):
            raise DomainError(f"power-law ramp needs r > 0, got {self.r}")

    @classmethod
    def power_law(cls, r: float, g_f: float = 1.0, tau_Q: float = 100.0) -> "QuenchProtocol":
        return cls(g_f=g_f, tau_Q=tau_Q, ramp=POWER_LAW, r=r)

    @classmethod
    def constant(cls, g_f: float = 1.0, tau_Q: float = 100.0) -> "QuenchProtocol":
        return cls(g_f=g_f, tau_Q=tau_Q, ramp=CONSTANT, r=0.0)

    @classmethod
    def step(cls, g_f: float = 1.0, tau_Q: float = 100.0) -> "QuenchProtocol":
        return cls(g_f=g_f, tau_Q=tau_Q, ramp=STEP, r=math.inf)

    @property
    def k(self) -> float:
        """Ramp rate g_f / tau_Q^r (power-law ramps only)."""
        if self.ramp != POWER_LAW:
            raise DomainError("k is defined for power-law ramps only")
        return self.g_f / self.tau_Q**self.r

    def with_tau(self, tau_Q: float) -> "QuenchProtocol":
        return QuenchProtocol(g_f=self.g_f, tau_Q=tau_Q, ramp=self.ramp, r=self.r)

    def label(self) -> str:
        if self.ramp == POWER_LAW:
            return f"r={self.r:g}"
        return self.ramp


def coupling_at(p: QuenchProtocol, t: float) -> float:
    """Coupling strength g(t)."""
    if not t >= 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    if t >= p.tau_Q or p.ramp == CONSTANT:
        return p.g_f
    if p.ramp == STEP:
        return 0.0
    return p.g_f * (t / p.tau_Q) ** p.r


def alpha(p: QuenchProtocol) -> float:
    """Scaling exponent r/(r+1); 0 for constant coupling, 1 for a step."""
    if p.ramp == CONSTANT:
        return 0.0
    if p.ramp == STEP:
        return 1.0
    return p.r / (p.r + 1.0)


def theta(p: QuenchProtocol, t: float) -> float:
    """Accumulated ramp phase k t^(1+r), defined on [0, tau_Q]."""
    if p.ramp != POWER_LAW:
        raise DomainError("theta is defined for power-law ramps only")
    if not 0 <= t <= p.tau_Q:
        raise DomainError(f"theta is only defined on the ramp [0, {p.tau_Q}], got t={t}")
    return p.k * t ** (1.0 + p.r)


def piece_coupling(p: QuenchProtocol, on_ramp: bool):
    """Fast g(t) for one integration piece: the ramp branch or the plateau."""
    if on_ramp and p.ramp == POWER_LAW:
        k, r = p.k, p.r
        return lambda t: k * t**r if t > 0 else 0.0
    if on_ramp and p.ramp == STEP:
        return lambda t: 0.0
    g_f = p.g_f
    return lambda t: g_f


def pieces(p: QuenchProtocol, horizon: float):
    """Split [0, horizon] at tau_Q; yields (t0, t1, on_ramp)."""
    split = p.tau_Q if p.ramp != CONSTANT else horizon
    bounds = [0.0] + ([split] if 0.0 < split < horizon else []) + [horizon]
    return [(t0, t1, p.ramp != CONSTANT and t1 <= p.tau_Q) for t0, t1 in zip(bounds[:-1], bounds[1:])]
