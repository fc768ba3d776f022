"""Minimal static SVG line plots for eyeballing experiment outputs."""

from pathlib import Path

import numpy as np

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _fmt(v):
    return f"{v:.2f}"


def line_plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False,
              width=480, height=320):
    """Write ``series`` (a dict label -> (xs, ys)) as an SVG polyline chart."""
    pad_l, pad_r, pad_t, pad_b = 60, 120, 30, 40
    tx = np.log10 if logx else (lambda v: v)
    ty = np.log10 if logy else (lambda v: v)
    pts = {}
    for label, (xs, ys) in series.items():
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        ok = np.isfinite(xs) & np.isfinite(ys)
        if logx:
            ok &= xs > 0
        if logy:
            ok &= ys > 0
        pts[label] = (tx(xs[ok]), ty(ys[ok]))
    allx = np.concatenate([p[0] for p in pts.values()] or [np.zeros(1)])
    ally = np.concatenate([p[1] for p in pts.values()] or [np.zeros(1)])
    if allx.size == 0:
        allx = ally = np.zeros(1)
    x0, x1 = allx.min(), allx.max()
    y0, y1 = ally.min(), ally.max()
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def sx(v):
        return pad_l + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return pad_t + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
           f'<text x="{width / 2:.0f}" y="18" text-anchor="middle">{title}</text>',
           f'<text x="{pad_l + pw / 2:.0f}" y="{height - 8}" text-anchor="middle">{xlabel}</text>',
           f'<text x="14" y="{pad_t + ph / 2:.0f}" text-anchor="middle" '
           f'transform="rotate(-90 14 {pad_t + ph / 2:.0f})">{ylabel}</text>']
    for v, anchor in ((y0, "end"), (y1, "end")):
        label = f"{10 ** v:.3g}" if logy else f"{v:.3g}"
        out.append(f'<text x="{pad_l - 4}" y="{_fmt(sy(v) + 4)}" text-anchor="{anchor}">{label}</text>')
    for v in (x0, x1):
        label = f"{10 ** v:.3g}" if logx else f"{v:.3g}"
        out.append(f'<text x="{_fmt(sx(v))}" y="{pad_t + ph + 14}" text-anchor="middle">{label}</text>')
    for i, (label, (xs, ys)) in enumerate(pts.items()):
        color = _COLORS[i % len(_COLORS)]
        coords = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(xs, ys))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = pad_t + 12 + 14 * i
        out.append(f'<text x="{pad_l + pw + 8}" y="{ly}" fill="{color}">{label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
    return Path(path)
