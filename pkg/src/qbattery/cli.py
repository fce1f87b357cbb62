"""``qbattery`` command line: simulate | sweep | tc | analytic.

Configuration precedence: built-in defaults < ``--config`` file < flags.  A
config file is either a flat JSON object keyed like the flags, or any CSV this
tool wrote (its ``# key=value`` header lines).  Exit codes: 0 success,
1 computation failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from . import __version__, analytic
from .dynamics import default_horizon, energy_trace, integrate_moments
from .errors import CutoffError, DomainError, QBatteryError, UnsupportedError
from .model import CONSTANT, POWER_LAW, STEP, QuenchProtocol, SystemParams
from .scaling import detect_rolloff, fit_power_law, log_grid, sweep_tauq
from .svg import line_plot
from .tcfock import TCConfig, hp_convergence, required_cutoff

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
QUANTITIES = ("constant_peak", "quench_energy", "theta_m", "optimal_tauq", "decoupled_energy")


class ConfigError(Exception):
    """Bad or incomplete configuration (exit code 2)."""


@dataclass
class RunConfig:
    command: str = "simulate"
    omega0: float = 1.0
    f: float = 0.01
    gf: float = 1.0
    gamma: float = 0.0
    ramp: str = POWER_LAW
    r: float = 1.0
    tauq: list = field(default_factory=lambda: [100.0])
    horizon: Optional[float] = None
    tol: float = 1e-10
    nout: int = 4001
    out: Optional[str] = None
    plot: Optional[str] = None
    plot_field: str = "E_B"
    jobs: int = 1
    # sweep
    grid: Optional[list] = None
    tauq_min: Optional[float] = None
    tauq_max: float = 1e4
    per_decade: int = 12
    method: str = "ode"
    fit: bool = False
    fit_window: Optional[list] = None
    # tc
    s_list: list = field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0])
    ncutoff: Optional[int] = None
    out_dir: str = "."
    # analytic
    quantity: Optional[str] = None
    t: Optional[float] = None

    def params(self) -> SystemParams:
        return SystemParams(omega0=self.omega0, F=self.f, gamma=self.gamma)

    def protocol(self, tau_Q: Optional[float] = None) -> QuenchProtocol:
        tau = self.tauq[0] if tau_Q is None else tau_Q
        return QuenchProtocol(g_f=self.gf, tau_Q=tau, ramp=self.ramp, r=self.r if self.ramp == POWER_LAW else
                              (0.0 if self.ramp == CONSTANT else math.inf))


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}
_LIST_KEYS = {"tauq", "grid", "fit_window", "s_list"}
_INT_KEYS = {"nout", "jobs", "per_decade", "ncutoff"}
_FLOAT_KEYS = {"omega0", "f", "gf", "gamma", "r", "horizon", "tol", "tauq_min", "tauq_max", "t"}
_BOOL_KEYS = {"fit"}


def _coerce(key, value):
    if value is None or value == "None":
        return None
    if key in _LIST_KEYS:
        if isinstance(value, (list, tuple)):
            items = list(value)
        else:
            items = [v for v in str(value).split(",") if v.strip()]
        return [float(v) for v in items]
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _BOOL_KEYS:
        if isinstance(value, bool):
            return value
        return str(value).lower() in ("1", "true", "yes")
    return value


def load_config_file(path: str) -> dict:
    """Read a JSON config or the ``# key=value`` header of a CSV written by this tool."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    else:
        raw = {}
        for line in text.splitlines():
            if line.startswith("# ") and "=" in line:
                key, _, value = line[2:].partition("=")
                raw[key.strip()] = value.strip()
    out = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        if key in ("version", "qbattery_version") or key.startswith("result."):
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r} in {path}")
        out[key] = _coerce(key, value)
    return out


def _add_common(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON config or a CSV previously written by qbattery")
    p.add_argument("--omega0", type=float, default=S)
    p.add_argument("--f", type=float, default=S, help="drive amplitude F")
    p.add_argument("--gf", type=float, default=S, help="final coupling g_f")
    p.add_argument("--gamma", type=float, default=S, help="charger dissipation rate")
    ramp = p.add_mutually_exclusive_group()
    ramp.add_argument("--r", type=float, default=S, help="power-law ramp exponent")
    ramp.add_argument("--step", dest="ramp", action="store_const", const=STEP, default=S)
    ramp.add_argument("--constant", dest="ramp", action="store_const", const=CONSTANT, default=S)
    p.add_argument("--tauq", default=S, help="quench duration(s), comma separated")
    p.add_argument("--horizon", type=float, default=S)
    p.add_argument("--tol", type=float, default=S)
    p.add_argument("--nout", type=int, default=S)
    p.add_argument("--out", default=S)
    p.add_argument("--plot", default=S, help="write an SVG plot to this path")
    p.add_argument("--jobs", type=int, default=S, help="worker processes (default $QBATTERY_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qbattery", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qbattery {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("simulate", help="integrate one or more charging trajectories")
    _add_common(p)
    p.add_argument("--plot-field", dest="plot_field", choices=("E_A", "E_B", "P_B"), default=S)

    p = sub.add_parser("sweep", help="peak quantities versus quench duration")
    _add_common(p)
    p.add_argument("--grid", default=S, help="explicit comma-separated tau_Q grid")
    p.add_argument("--tauq-min", dest="tauq_min", type=float, default=S)
    p.add_argument("--tauq-max", dest="tauq_max", type=float, default=S)
    p.add_argument("--per-decade", dest="per_decade", type=int, default=S)
    p.add_argument("--method", choices=("ode", "closed"), default=S)
    p.add_argument("--fit", action="store_const", const=True, default=S)
    p.add_argument("--fit-window", dest="fit_window", default=S, help="lo,hi")

    p = sub.add_parser("tc", help="Tavis-Cummings cross-check")
    _add_common(p)
    p.add_argument("--s-list", dest="s_list", default=S, help="comma-separated spins")
    p.add_argument("--ncutoff", type=int, default=S)
    p.add_argument("--out-dir", dest="out_dir", default=S)

    p = sub.add_parser("analytic", help="closed-form reference values")
    _add_common(p)
    p.add_argument("quantity", choices=QUANTITIES)
    p.add_argument("--t", type=float, default=S, help="evaluation time")
    return parser


def resolve_config(ns: argparse.Namespace, env=None) -> RunConfig:
    """Merge defaults, config file and flags into a total RunConfig."""
    env = os.environ if env is None else env
    merged = {}
    if "QBATTERY_JOBS" in env:
        try:
            merged["jobs"] = int(env["QBATTERY_JOBS"])
        except ValueError as exc:
            raise ConfigError(f"QBATTERY_JOBS must be an integer: {exc}") from exc
    flags = vars(ns).copy()
    command = flags.pop("command")
    if "config" in flags:
        file_cfg = load_config_file(flags.pop("config"))
        file_cfg.pop("command", None)
        merged.update(file_cfg)
    if "r" in flags:
        merged["ramp"] = POWER_LAW
    for key, value in flags.items():
        merged[key] = _coerce(key, value)
    cfg = RunConfig(command=command, **merged)
    _validate(cfg)
    _fill_derived(cfg)
    return cfg


def _validate(cfg: RunConfig):
    try:
        cfg.params()
        if not cfg.tauq:
            raise ConfigError("--tauq needs at least one value")
        for tau in cfg.tauq:
            cfg.protocol(tau)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    if cfg.nout < 2:
        raise ConfigError("--nout must be >= 2")
    if not 1e-14 < cfg.tol < 1e-3:
        raise ConfigError("--tol must lie in (1e-14, 1e-3)")
    if cfg.command == "sweep" and cfg.grid is not None and len(cfg.grid) == 0:
        raise ConfigError("empty --grid")
    if cfg.command == "tc":
        if cfg.gamma != 0:
            raise ConfigError("unsupported feature: the Tavis-Cummings path is lossless only (gamma must be 0)")
        if not cfg.s_list:
            raise ConfigError("--s-list needs at least one spin")


def _fill_derived(cfg: RunConfig):
    if cfg.command in ("simulate", "tc") and cfg.horizon is None:
        if cfg.gf <= 0:
            raise ConfigError("--horizon is required when g_f = 0")
        cfg.horizon = max(default_horizon(cfg.protocol(t)) for t in cfg.tauq)
    if cfg.command == "sweep":
        if cfg.grid is None:
            lo = cfg.tauq_min if cfg.tauq_min is not None else 10 * math.pi / cfg.gf
            if not 0 < lo < cfg.tauq_max:
                raise ConfigError("sweep needs 0 < tauq_min < tauq_max")
            cfg.tauq_min = lo
            cfg.grid = [float(v) for v in log_grid(lo, cfg.tauq_max, cfg.per_decade)]
        if len(cfg.grid) < 3:
            raise ConfigError(f"sweep grid needs at least 3 points, got {len(cfg.grid)}")
        if any(b <= a for a, b in zip(cfg.grid, cfg.grid[1:])):
            raise ConfigError("sweep grid must be strictly ascending")
        if cfg.fit and cfg.fit_window is None:
            cfg.fit_window = [10 * math.pi / cfg.gf, cfg.grid[-1]]
        if cfg.fit_window is not None and len(cfg.fit_window) != 2:
            raise ConfigError("--fit-window takes lo,hi")
    if cfg.command == "tc" and cfg.ncutoff is None:
        cfg.ncutoff = max(required_cutoff(cfg.params(), cfg.protocol(t), cfg.horizon) for t in cfg.tauq)
    if cfg.command == "analytic" and cfg.quantity in ("quench_energy", "decoupled_energy") and cfg.t is None:
        raise ConfigError(f"{cfg.quantity} needs --t")


def num(v) -> str:
    """12-significant-digit decimal text."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.12g}"


def _header_value(v) -> str:
    if isinstance(v, list):
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def metadata_lines(cfg: RunConfig) -> list:
    lines = [f"# qbattery_version={__version__}"]
    for key, value in sorted(asdict(cfg).items()):
        if key == "jobs":
            # output must not depend on worker count
            continue
        lines.append(f"# {key}={_header_value(value)}")
    return lines


def write_csv(path, cfg: RunConfig, header: str, rows, footer=()):
    lines = metadata_lines(cfg) + [header]
    lines += [",".join(row) for row in rows]
    lines += list(footer)
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _suffixed(path: str, tau: float) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}_tauq{tau:g}{ext or '.csv'}"


def _report(cfg, msg):
    stream = sys.stderr if cfg.out in (None, "-") else sys.stdout
    print(msg, file=stream)


def cmd_simulate(cfg: RunConfig) -> int:
    params = cfg.params()
    series = []
    for tau in cfg.tauq:
        prot = cfg.protocol(tau)
        traj = integrate_moments(params, prot, cfg.horizon, cfg.nout, cfg.tol)
        tr = energy_trace(traj)
        rows = (
            [num(t), num(a.real), num(a.imag), num(b.real), num(b.imag), num(ea), num(eb), num(pb)]
            for t, a, b, ea, eb, pb in zip(tr.times, traj.a_amp, traj.b_amp, tr.E_A, tr.E_B, tr.P_B)
        )
        path = cfg.out
        if path not in (None, "-") and len(cfg.tauq) > 1:
            path = _suffixed(path, tau)
        one = RunConfig(**{**asdict(cfg), "tauq": [tau]})
        write_csv(path, one, "t,re_a,im_a,re_b,im_b,E_A,E_B,P_B", rows)
        if tr.peak is not None:
            _report(cfg, f"tauq={num(tau)} t_m={num(tr.peak.t_m)} E_Bm={num(tr.peak.E_Bm)} P_Bm={num(tr.peak.P_Bm)}")
        else:
            _report(cfg, f"tauq={num(tau)} no_peak_within_horizon")
        y = {"E_A": tr.E_A, "E_B": tr.E_B, "P_B": tr.P_B}[cfg.plot_field]
        scale = params.omega0 * params.F**2 if params.F > 0 else 1.0
        series.append({"x": list(tr.times), "y": list(y / scale), "label": f"{prot.label()}, tau_Q={tau:g}"})
    if cfg.plot:
        unit = " / (omega0 F^2)" if params.F > 0 else ""
        line_plot(series, cfg.plot, title=f"{cfg.plot_field}(t), gamma={cfg.gamma:g}",
                  xlabel="t (1/omega0)", ylabel=f"{cfg.plot_field}{unit}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    params = cfg.params()
    rows = sweep_tauq(params, cfg.protocol(cfg.grid[0]), cfg.grid, cfg.method, cfg.jobs, cfg.tol)
    footer = []
    fits = {}
    if cfg.fit:
        for fld in ("P_Bm", "E_Bm"):
            fit = fit_power_law(rows, fld, tuple(cfg.fit_window))
            fits[fld] = fit
            key = fld.lower()
            footer += [
                f"# result.fit.{key}.slope={num(fit.slope)}",
                f"# result.fit.{key}.intercept={num(fit.intercept)}",
                f"# result.fit.{key}.r_squared={num(fit.r_squared)}",
                f"# result.fit.{key}.n_points={fit.n_points}",
            ]
    roll = detect_rolloff(rows)
    footer.append(f"# result.rolloff_tauq={num(roll) if roll is not None else 'none'}")
    csv_rows = ([num(r.tau_Q), num(r.t_m), num(r.E_Bm), num(r.P_Bm), r.status] for r in rows)
    write_csv(cfg.out, cfg, "tau_q,t_m,e_bm,p_bm,status", csv_rows, footer)
    for line in footer:
        _report(cfg, line[len("# result."):])
    if cfg.plot:
        ok = [r for r in rows if r.ok]
        xs = [r.tau_Q for r in ok]
        series = [
            {"x": xs, "y": [r.E_Bm for r in ok], "label": "E_B,m", "markers_only": True},
            {"x": xs, "y": [r.P_Bm for r in ok], "label": "P_B,m", "markers_only": True},
        ]
        for fld, fit in fits.items():
            lo, hi = fit.window
            series.append({
                "x": [lo, hi],
                "y": [math.exp(fit.intercept) * lo**fit.slope, math.exp(fit.intercept) * hi**fit.slope],
                "label": f"fit {fld}: slope {fit.slope:.3f}", "dashed": True,
            })
        line_plot(series, cfg.plot, title=f"peak quantities, {cfg.protocol().label()}, gamma={cfg.gamma:g}",
                  xlabel="tau_Q (1/omega0)", ylabel="E_B,m  /  P_B,m", loglog=True)
    return EXIT_OK


def cmd_tc(cfg: RunConfig) -> int:
    params = cfg.params()
    prot = cfg.protocol()
    base = TCConfig(cfg.s_list[0], cfg.ncutoff, params, prot)
    errors, traces = hp_convergence(base, cfg.s_list, cfg.horizon, cfg.nout, min(cfg.tol, 1e-11),
                                    cfg.jobs, return_traces=True)
    os.makedirs(cfg.out_dir, exist_ok=True)
    for s, tr in zip(cfg.s_list, traces):
        rows = ([num(t), num(a), num(b), num(n), num(lk)]
                for t, a, b, n, lk in zip(tr.times, tr.E_A, tr.E_B, tr.norm, tr.leakage))
        write_csv(os.path.join(cfg.out_dir, f"tc_s{s:g}.csv"), cfg, "t,e_a,e_b,norm,leakage", rows)
    write_csv(os.path.join(cfg.out_dir, "tc_convergence.csv"), cfg, "s,error",
              ([num(s), num(e)] for s, e in errors))
    for s, e in errors:
        print(f"s={num(s)} error={num(e)}")
    if cfg.plot:
        series = [{"x": list(tr.times), "y": list(tr.E_B), "label": f"TC s={s:g}"}
                  for s, tr in zip(cfg.s_list, traces)]
        bos = energy_trace(integrate_moments(params, prot, cfg.horizon, cfg.nout, 1e-12))
        series.append({"x": list(bos.times), "y": list(bos.E_B), "label": "bosonic", "dashed": True})
        line_plot(series, cfg.plot, title="Tavis-Cummings vs bosonic battery",
                  xlabel="t (1/omega0)", ylabel="E_B (omega0)")
    return EXIT_OK


def cmd_analytic(cfg: RunConfig) -> int:
    params = cfg.params()
    q = cfg.quantity
    out = []
    if q == "constant_peak":
        pk = analytic.constant_coupling_peak(params, cfg.gf)
        out = [("E_Bm", pk.E_Bm), ("t_m", pk.t_m), ("P_Bm", pk.P_Bm)]
    elif q == "quench_energy":
        out = [("E_B", analytic.energy_quench_closed(params, cfg.protocol(), cfg.t))]
    elif q == "theta_m":
        if cfg.ramp != POWER_LAW:
            raise ConfigError("theta_m needs a power-law ramp (--r)")
        th = analytic.peak_phase(cfg.r)
        out = [("theta_m", th), ("sqrt_theta_m", math.sqrt(th))]
        if cfg.r == 1:
            out += [(f"fresnel_residual[{k}]", v) for k, v in analytic.fresnel_peak_residuals(th).items()]
        try:
            pk = analytic.peak_prediction(params, cfg.protocol())
            out += [("t_m", pk.t_m), ("E_Bm", pk.E_Bm), ("P_Bm", pk.P_Bm)]
        except analytic.RegimeError as exc:
            print(f"note: {exc}", file=sys.stderr)
    elif q == "optimal_tauq":
        out = [("optimal_tauq", analytic.optimal_tauq_step(cfg.gamma)),
               ("as_printed_lambert_form", analytic.optimal_tauq_as_printed(cfg.gamma))]
    elif q == "decoupled_energy":
        out = [("E_A", analytic.charger_energy_decoupled(params, cfg.t))]
    for name, value in out:
        print(f"{name}={num(value)}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "sweep": cmd_sweep, "tc": cmd_tc, "analytic": cmd_analytic}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve_config(ns)
    except (ConfigError, UnsupportedError) as exc:
        print(f"qbattery: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TypeError, ValueError) as exc:
        print(f"qbattery: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QBatteryError as exc:
        print(f"qbattery: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"qbattery: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CutoffError as exc:
        print(f"qbattery: cutoff error: {exc} (suggested --ncutoff {exc.suggested_cutoff})", file=sys.stderr)
        return EXIT_FAIL
    except QBatteryError as exc:
        t = getattr(exc, "t", None)
        where = f" at t={t}" if t is not None else ""
        print(f"qbattery: {type(exc).__name__}{where}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"qbattery: I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
