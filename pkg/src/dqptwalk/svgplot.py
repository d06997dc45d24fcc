"""Minimal static SVG output: line charts with event markers, error-bar
charts, and a winding-number heat map. No drawing toolkit, just shapes."""
from __future__ import annotations

import numpy as np

PALETTE = ("#2060a8", "#c03020", "#208040", "#9040a0", "#c08020", "#508090")
W, H = 720, 420
ML, MR, MT, MB = 62, 16, 34, 46


def _ticks(lo, hi, n=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    t0 = np.ceil(lo / step) * step
    out = []
    t = t0
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 else float(t))
        t += step
    return out


def _fmt(v):
    s = f"{v:.6g}"
    return s


class _Canvas:
    def __init__(self, title, xlabel, ylabel):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>',
            f'<text x="{(ML + W - MR) / 2}" y="{H - 10}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{xlabel}</text>',
            f'<text x="14" y="{(MT + H - MB) / 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 14 {(MT + H - MB) / 2})">{ylabel}</text>',
        ]

    def finish(self, path):
        self.parts.append("</svg>")
        with open(path, "w") as fh:
            fh.write("\n".join(self.parts))


def _frame(cv, xlo, xhi, ylo, yhi):
    if yhi - ylo < 1e-12:
        ylo, yhi = ylo - 0.5, yhi + 0.5
    sx = lambda x: ML + (x - xlo) / (xhi - xlo) * (W - ML - MR)
    sy = lambda y: H - MB - (y - ylo) / (yhi - ylo) * (H - MT - MB)
    cv.parts.append(f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" '
                    f'height="{H - MT - MB}" fill="none" stroke="#333"/>')
    for t in _ticks(xlo, xhi):
        px = sx(t)
        cv.parts.append(f'<line x1="{px:.1f}" y1="{H - MB}" x2="{px:.1f}" '
                        f'y2="{H - MB + 4}" stroke="#333"/>')
        cv.parts.append(f'<text x="{px:.1f}" y="{H - MB + 16}" text-anchor="middle" '
                        f'font-family="sans-serif" font-size="10">{_fmt(t)}</text>')
    for t in _ticks(ylo, yhi):
        py = sy(t)
        cv.parts.append(f'<line x1="{ML - 4}" y1="{py:.1f}" x2="{ML}" '
                        f'y2="{py:.1f}" stroke="#333"/>')
        cv.parts.append(f'<text x="{ML - 7}" y="{py + 3:.1f}" text-anchor="end" '
                        f'font-family="sans-serif" font-size="10">{_fmt(t)}</text>')
    return sx, sy


def _finite_span(arrs, fallback=(0.0, 1.0)):
    vals = np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrs]) \
        if arrs else np.array([])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return fallback
    lo, hi = float(vals.min()), float(vals.max())
    pad = 0.05 * (hi - lo) or 0.5
    return lo - pad, hi + pad


def line_chart(path, series, vlines=(), title="", xlabel="t", ylabel=""):
    """series: iterable of (label, x, y). Non-finite y breaks the line;
    vlines draw dashed event markers."""
    series = [(lab, np.asarray(x, float), np.asarray(y, float))
              for lab, x, y in series]
    xlo, xhi = _finite_span([x for _, x, _ in series])
    ylo, yhi = _finite_span([y for _, _, y in series])
    cv = _Canvas(title, xlabel, ylabel)
    sx, sy = _frame(cv, xlo, xhi, ylo, yhi)
    for v in vlines:
        if xlo <= v <= xhi:
            px = sx(v)
            cv.parts.append(f'<line x1="{px:.1f}" y1="{MT}" x2="{px:.1f}" '
                            f'y2="{H - MB}" stroke="#888" stroke-dasharray="4 3"/>')
    for i, (label, x, y) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = []
        chunks = []
        for xi, yi in zip(x, y):
            if np.isfinite(yi):
                pts.append(f"{sx(xi):.1f},{sy(yi):.1f}")
            elif pts:
                chunks.append(pts)
                pts = []
        if pts:
            chunks.append(pts)
        for ch in chunks:
            cv.parts.append(f'<polyline points="{" ".join(ch)}" fill="none" '
                            f'stroke="{color}" stroke-width="1.4"/>')
        if label:
            ly = MT + 14 + 14 * i
            cv.parts.append(f'<line x1="{W - MR - 90}" y1="{ly - 4}" '
                            f'x2="{W - MR - 70}" y2="{ly - 4}" stroke="{color}" '
                            f'stroke-width="2"/>')
            cv.parts.append(f'<text x="{W - MR - 65}" y="{ly}" '
                            f'font-family="sans-serif" font-size="11">{label}</text>')
    cv.finish(path)


def errorbar_chart(path, rows, title="", xlabel="t", ylabel=""):
    """rows: (t, center, err_plus, err_minus) tuples for one quantity."""
    rows = sorted(rows)
    ts = np.array([r[0] for r in rows])
    cs = np.array([r[1] for r in rows])
    up = cs + np.array([r[2] for r in rows])
    dn = cs - np.array([r[3] for r in rows])
    xlo, xhi = _finite_span([ts])
    ylo, yhi = _finite_span([cs, up, dn])
    cv = _Canvas(title, xlabel, ylabel)
    sx, sy = _frame(cv, xlo, xhi, ylo, yhi)
    color = PALETTE[0]
    for t, c, u, d in zip(ts, cs, up, dn):
        if not np.isfinite(c):
            continue
        px = sx(t)
        cv.parts.append(f'<line x1="{px:.1f}" y1="{sy(d):.1f}" x2="{px:.1f}" '
                        f'y2="{sy(u):.1f}" stroke="{color}"/>')
        for yy in (u, d):
            cv.parts.append(f'<line x1="{px - 3:.1f}" y1="{sy(yy):.1f}" '
                            f'x2="{px + 3:.1f}" y2="{sy(yy):.1f}" stroke="{color}"/>')
        cv.parts.append(f'<circle cx="{px:.1f}" cy="{sy(c):.1f}" r="2.5" '
                        f'fill="{color}"/>')
    cv.finish(path)


def _winding_color(w, status):
    if w is None:
        return "#b0b0b0" if status == "boundary" else "#707070"
    table = {0: "#f2f2e8", -2: "#3a6fb0", 2: "#c04a3a", -1: "#7fa8d0",
             1: "#d08a7f", -4: "#1d3a60", 4: "#6e2218"}
    return table.get(int(w), "#caa0d0")


def phase_map(path, diagram, title=""):
    """Winding heat map of a PhaseDiagram; boundary cells gray."""
    res = diagram.resolution
    cw = (W - ML - MR) / res
    ch = (H - MT - MB) / res
    cv = _Canvas(title, "theta1", "theta2")
    t1s = sorted({c.angles.theta1 for c in diagram.cells})
    t2s = sorted({c.angles.theta2 for c in diagram.cells})
    i1 = {v: i for i, v in enumerate(t1s)}
    i2 = {v: i for i, v in enumerate(t2s)}
    for c in diagram.cells:
        x = ML + i1[c.angles.theta1] * cw
        y = H - MB - (i2[c.angles.theta2] + 1) * ch
        cv.parts.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{cw + 0.5:.1f}" '
                        f'height="{ch + 0.5:.1f}" '
                        f'fill="{_winding_color(c.winding, c.pt_status)}"/>')
    cv.parts.append(f'<rect x="{ML}" y="{MT}" width="{W - ML - MR}" '
                    f'height="{H - MT - MB}" fill="none" stroke="#333"/>')
    cv.finish(path)
