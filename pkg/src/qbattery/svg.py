"""Dependency-free SVG line plots (linear or log-log axes)."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 78, 20, 34, 56


def _nice_ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _fmt(v):
    return f"{v:.3g}"


def line_plot(series, path, title="", xlabel="", ylabel="", loglog=False, markers=False):
    """Write an SVG plot.

    ``series`` is a list of dicts with keys ``x``, ``y``, ``label`` and
    optionally ``dashed`` / ``markers``.  Non-positive points are dropped on
    log axes, non-finite points always.
    """
    tf = (lambda v: math.log10(v)) if loglog else (lambda v: v)
    cleaned = []
    for s in series:
        pts = [
            (tf(x), tf(y)) for x, y in zip(s["x"], s["y"])
            if math.isfinite(x) and math.isfinite(y) and (not loglog or (x > 0 and y > 0))
        ]
        cleaned.append((s, pts))
    allpts = [p for _, pts in cleaned for p in pts]
    if not allpts:
        allpts = [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in allpts), max(p[0] for p in allpts)
    y0, y1 = min(p[1] for p in allpts), max(p[1] for p in allpts)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.04 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + ph - (y - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if loglog:
        xt = list(range(math.ceil(x0), math.floor(x1) + 1)) or [x0]
        yt = list(range(math.ceil(y0), math.floor(y1) + 1)) or [y0]
        xlab = [f"1e{int(t)}" if float(t).is_integer() else _fmt(10**t) for t in xt]
        ylab = [f"1e{int(t)}" if float(t).is_integer() else _fmt(10**t) for t in yt]
    else:
        xt, yt = _nice_ticks(x0, x1), _nice_ticks(y0, y1)
        xlab, ylab = [_fmt(t) for t in xt], [_fmt(t) for t in yt]
    for t, lab in zip(xt, xlab):
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{TOP + ph}" x2="{X:.2f}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{TOP + ph + 18}" text-anchor="middle">{escape(lab)}</text>')
    for t, lab in zip(yt, ylab):
        Y = py(t)
        out.append(f'<line x1="{LEFT - 5}" y1="{Y:.2f}" x2="{LEFT}" y2="{Y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{Y + 4:.2f}" text-anchor="end">{escape(lab)}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{H - 14}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{TOP + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2})">{escape(ylabel)}</text>'
    )
    out.append(f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>')

    for i, (s, pts) in enumerate(cleaned):
        color = s.get("color", COLORS[i % len(COLORS)])
        if pts and not s.get("markers_only"):
            d = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            dash = ' stroke-dasharray="6,4"' if s.get("dashed") else ""
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{d}"/>')
        if markers or s.get("markers_only"):
            for x, y in pts:
                out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = TOP + 16 + 16 * i
        out.append(f'<line x1="{LEFT + 10}" y1="{ly - 4}" x2="{LEFT + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + 36}" y="{ly}">{escape(s.get("label", ""))}</text>')
    out.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
