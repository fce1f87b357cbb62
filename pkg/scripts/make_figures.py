"""Regenerate the qualitative figure SVGs from the checked-in configs.

Usage: python3 scripts/make_figures.py [--out-dir figures] [--jobs N]

Each ``configs/*.json`` carries its own ``command``; outputs land in
``--out-dir``.  The two power sweeps are also overlaid into fig3b_combined.svg.
"""
import argparse
import json
import os
import sys
from pathlib import Path

from qbattery.cli import main as qbattery_main
from qbattery.svg import line_plot

ROOT = Path(__file__).resolve().parent.parent


def _sweep_columns(path):
    taus, powers = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or line.startswith("tau_q"):
            continue
        tau, _, _, p_bm, status = line.split(",")
        if status == "ok":
            taus.append(float(tau))
            powers.append(float(p_bm))
    return taus, powers


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="figures")
    ap.add_argument("--jobs", type=int, default=int(os.environ.get("QBATTERY_JOBS", "1")))
    ap.add_argument("--configs", default=str(ROOT / "configs"))
    args = ap.parse_args(argv)

    out = Path(args.out_dir).resolve()
    out.mkdir(parents=True, exist_ok=True)
    cwd = os.getcwd()
    failed = []
    try:
        os.chdir(out)
        for cfg in sorted(Path(args.configs).glob("*.json")):
            command = json.loads(cfg.read_text())["command"]
            print(f"[{cfg.stem}] qbattery {command}", flush=True)
            rc = qbattery_main([command, "--config", str(cfg), "--jobs", str(args.jobs)])
            if rc != 0:
                failed.append(cfg.stem)
    finally:
        os.chdir(cwd)

    if (out / "fig3b.csv").exists() and (out / "fig3b_lossless.csv").exists():
        series = []
        for name, label in (("fig3b_lossless", "gamma = 0"), ("fig3b", "gamma = 0.1")):
            x, y = _sweep_columns(out / f"{name}.csv")
            series.append({"x": x, "y": y, "label": label, "markers_only": True})
        line_plot(series, str(out / "fig3b_combined.svg"), title="peak power vs quench duration, step ramp",
                  xlabel="tau_Q (1/omega0)", ylabel="P_B,m", loglog=True)
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
