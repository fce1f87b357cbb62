"""Driven Tavis-Cummings battery on a truncated Fock x collective-spin space.

The battery mode is replaced by a spin-s collective spin via Holstein-Primakoff,
S+ ~ sqrt(2s) b^dag for s -> inf, giving

    H(t) = g(t)/sqrt(2s) (S+ a + S- a^dag) + F (a + a^dag).

The battery starts in the lowest-weight state |m = -s> and its energy is
omega0 (<S_z> + s).  Basis index is n*(2s+1) + (m+s), n the charger occupation.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .dynamics import EnergyTrace, default_horizon, energy_trace, find_first_peak, integrate_moments
from .errors import CutoffError, DomainError, IntegratorError, StiffnessError, UnsupportedError
from .model import QuenchProtocol, SystemParams, coupling_at, piece_coupling, pieces

LEAKAGE_LIMIT = 1e-6
NORM_DRIFT_LIMIT = 1e-6


@dataclass(frozen=True)
class TCConfig:
    s: float
    n_cutoff: int
    params: SystemParams
    protocol: QuenchProtocol

    def __post_init__(self):
        two_s = 2 * self.s
        if self.s <= 0 or abs(two_s - round(two_s)) > 1e-12:
            raise DomainError(f"s must be a positive integer or half-integer, got {self.s}")
        if int(self.n_cutoff) < 2:
            raise DomainError(f"n_cutoff must be >= 2, got {self.n_cutoff}")
        if self.params.gamma != 0:
            raise UnsupportedError("Tavis-Cummings evolution is lossless only (gamma must be 0)")

    @property
    def spin_dim(self) -> int:
        return int(round(2 * self.s)) + 1

    @property
    def dim(self) -> int:
        return int(self.n_cutoff) * self.spin_dim


@dataclass(frozen=True)
class TCState:
    amplitudes: np.ndarray
    time: float


@dataclass(frozen=True)
class TCTrace(EnergyTrace):
    norm: Optional[np.ndarray] = None
    leakage: Optional[np.ndarray] = None
    s: float = 0.0
    n_cutoff: int = 0


class _Operators:
    def __init__(self, cfg: TCConfig):
        n_c, d = int(cfg.n_cutoff), cfg.spin_dim
        s = cfg.s
        a = sparse.diags(np.sqrt(np.arange(1, n_c, dtype=float)), 1, format="csr")
        m = np.arange(d, dtype=float) - s
        # S+|m> = sqrt(s(s+1) - m(m+1)) |m+1>
        s_plus = sparse.diags(np.sqrt(s * (s + 1) - m[:-1] * (m[:-1] + 1)), -1, format="csr")
        eye_s = sparse.identity(d, format="csr")
        self.interaction = (
            sparse.kron(a, s_plus) + sparse.kron(a.T, s_plus.T)
        ).tocsr() / math.sqrt(2 * s)
        self.drive = sparse.kron(a + a.T, eye_s).tocsr()
        self.n_charger = np.repeat(np.arange(n_c, dtype=float), d)
        self.n_battery = np.tile(m + s, n_c)
        self.boundary = self.n_charger == n_c - 1


def tc_hamiltonian(cfg: TCConfig, t: float):
    """Sparse Hamiltonian H(t) (CSR)."""
    ops = _Operators(cfg)
    return (coupling_at(cfg.protocol, t) * ops.interaction + cfg.params.F * ops.drive).tocsr()


def initial_state(cfg: TCConfig) -> TCState:
    """Charger vacuum times lowest-weight spin state."""
    psi = np.zeros(cfg.dim, dtype=complex)
    psi[0] = 1.0
    return TCState(psi, 0.0)


def evolve_tc(
    cfg: TCConfig,
    horizon: Optional[float] = None,
    n_out: int = 1001,
    tol: float = 1e-11,
    initial: Optional[np.ndarray] = None,
    check_cutoff: bool = True,
) -> TCTrace:
    """Schrodinger evolution of the driven TC battery, sampled on a uniform grid.

    Raises
    ------
    CutoffError
        Probability at the top charger level exceeded ``LEAKAGE_LIMIT``.
    IntegratorError
        Norm drifted by more than ``NORM_DRIFT_LIMIT``.
    """
    if horizon is None:
        horizon = default_horizon(cfg.protocol)
    ops = _Operators(cfg)
    prot, F = cfg.protocol, cfg.params.F
    psi = initial_state(cfg).amplitudes if initial is None else np.asarray(initial, dtype=complex).copy()
    if psi.shape != (cfg.dim,):
        raise DomainError(f"initial state must have length {cfg.dim}")

    times = np.linspace(0.0, horizon, int(n_out))
    segments = pieces(prot, horizon)
    states = np.empty((cfg.dim, len(times)), dtype=complex)
    states[:, 0] = psi
    for j, (t0, t1, on_ramp) in enumerate(segments):
        coupling = piece_coupling(prot, on_ramp)

        def rhs(t, y, coupling=coupling):
            return -1j * (coupling(t) * (ops.interaction @ y) + F * (ops.drive @ y))

        last = j == len(segments) - 1
        # each sample belongs to the piece that starts at or before it
        idx = np.flatnonzero((times > 0.0) & (times >= t0) & ((times <= t1) if last else (times < t1)))
        t_eval = times[idx] if last else np.concatenate([times[idx], [t1]])
        res = solve_ivp(rhs, (t0, t1), psi, method="DOP853", rtol=tol, atol=tol * 1e-2, t_eval=t_eval)
        if res.status != 0:
            raise StiffnessError(f"TC integration stalled: {res.message}", t=float(res.t[-1]) if res.t.size else t0)
        states[:, idx] = res.y[:, : idx.size]
        psi = res.y[:, -1] if res.y.shape[1] else psi

    prob = np.abs(states) ** 2
    norm = prob.sum(axis=0)
    w0 = cfg.params.omega0
    E_A = w0 * (ops.n_charger @ prob)
    E_B = w0 * (ops.n_battery @ prob)
    leakage = prob[ops.boundary].sum(axis=0)
    P_B = np.zeros_like(E_B)
    P_B[1:] = E_B[1:] / times[1:]

    drift = float(np.max(np.abs(norm - norm[0])))
    if drift > NORM_DRIFT_LIMIT:
        raise IntegratorError(f"norm drift {drift:.3g} exceeds {NORM_DRIFT_LIMIT:g}; tighten tol")
    if check_cutoff and float(leakage.max()) > LEAKAGE_LIMIT:
        suggested = 2 * int(cfg.n_cutoff)
        raise CutoffError(
            f"charger leakage {leakage.max():.3g} at n_cutoff={cfg.n_cutoff}; "
            f"rerun with n_cutoff >= {suggested}",
            suggested_cutoff=suggested,
        )
    base = EnergyTrace(times, E_A, E_B, P_B)
    return TCTrace(times, E_A, E_B, P_B, find_first_peak(base), norm, leakage, cfg.s, int(cfg.n_cutoff))


def required_cutoff(params: SystemParams, protocol: QuenchProtocol, horizon: Optional[float] = None) -> int:
    """Charger truncation from the bosonic charger energy: ceil(4 max E_A/omega0) + 10."""
    if horizon is None:
        horizon = default_horizon(protocol)
    if params.F == 0:
        return 10
    n_out = max(2001, int(horizon * max(protocol.g_f, 1.0) * 20))
    trace = energy_trace(integrate_moments(params, protocol, horizon, n_out, 1e-10))
    return int(math.ceil(4.0 * float(trace.E_A.max()) / params.omega0)) + 10


def _tc_job(args):
    cfg, horizon, n_out, tol = args
    return evolve_tc(cfg, horizon, n_out, tol)


def hp_convergence(
    base_cfg: TCConfig,
    s_list: Sequence[float],
    horizon: Optional[float] = None,
    n_out: int = 1001,
    tol: float = 1e-11,
    jobs: int = 1,
    return_traces: bool = False,
):
    """Sup-norm distance between TC and bosonic battery energies for each spin.

    error(s) = max_t |E_B^TC - E_B^bos| / max_t E_B^bos on a common grid.
    Returns a list of ``(s, error)``; with ``return_traces`` also the TC traces.
    """
    s_list = [float(s) for s in s_list]
    if not s_list:
        raise DomainError("s_list is empty")
    if horizon is None:
        horizon = default_horizon(base_cfg.protocol)
    bos = energy_trace(integrate_moments(base_cfg.params, base_cfg.protocol, horizon, n_out, 1e-12))
    scale = float(bos.E_B.max())
    cfgs = [TCConfig(s, base_cfg.n_cutoff, base_cfg.params, base_cfg.protocol) for s in s_list]
    tasks = [(c, horizon, n_out, tol) for c in cfgs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_tc_job, tasks))
    else:
        traces = [_tc_job(t) for t in tasks]
    rows = []
    for s, tr in zip(s_list, traces):
        err = float(np.max(np.abs(tr.E_B - bos.E_B))) / scale if scale > 0 else float(np.max(np.abs(tr.E_B)))
        rows.append((s, err))
    return (rows, traces) if return_traces else rows
