"""Minimal self-contained SVG line plots (no plotting dependency).

Supports log-scaled axes, shaded error bands and dashed reference lines;
every plot embeds the provenance hashes as a comment element.
"""

from __future__ import annotations

import math

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 36, 52


def _transform(values, lo, hi, out_lo, out_hi, log):
    def t(v):
        if log:
            v = math.log10(max(v, 1e-300))
        span = hi - lo if hi > lo else 1.0
        return out_lo + (v - lo) / span * (out_hi - out_lo)
    return t


def _limits(series, log):
    vals = [v for s in series for v in s if v is not None and math.isfinite(v)]
    if log:
        vals = [math.log10(max(v, 1e-300)) for v in vals if v > 0]
    if not vals:
        vals = [0.0, 1.0]
    lo, hi = min(vals), max(vals)
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo, hi, n=6):
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / max(n, 1)))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * span:
        out.append(round(v, 12))
        v += step
    return out


def line_plot(path: str, x, series: dict, title: str, xlabel: str, ylabel: str,
              provenance: str = "", logy: bool = False, logx: bool = False,
              bands: dict | None = None, reference: dict | None = None) -> None:
    """series: name -> y list; bands: name -> (lower, upper) lists;
    reference: name -> y list drawn dashed."""
    bands = bands or {}
    reference = reference or {}
    xlo, xhi = _limits([x], logx)
    ally = list(series.values()) + list(reference.values()) \
        + [b[0] for b in bands.values()] + [b[1] for b in bands.values()]
    ylo, yhi = _limits(ally, logy)
    tx = _transform(x, xlo, xhi, _ML, _W - _MR, logx)
    ty = _transform(None, ylo, yhi, _H - _MB, _MT, logy)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f"<!-- {provenance} -->",
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]

    def pts(xs, ys):
        out = []
        for xv, yv in zip(xs, ys):
            if yv is None or not math.isfinite(yv) or (logy and yv <= 0):
                continue
            out.append(f"{tx(xv):.2f},{ty(yv):.2f}")
        return " ".join(out)

    # axes and ticks
    parts.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>')
    parts.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    for tick in _ticks(xlo, xhi):
        px = _ML + (tick - xlo) / (xhi - xlo) * (_W - _ML - _MR)
        label = f"1e{tick:g}" if logx else f"{tick:g}"
        parts.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" y2="{_H - _MB + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.1f}" y="{_H - _MB + 18}" text-anchor="middle">{label}</text>')
    for tick in _ticks(ylo, yhi):
        py = (_H - _MB) + (tick - ylo) / (yhi - ylo) * (_MT - (_H - _MB))
        label = f"1e{tick:g}" if logy else f"{tick:g}"
        parts.append(f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{_ML - 8}" y="{py + 4:.1f}" text-anchor="end">{label}</text>')
    parts.append(f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 14}" text-anchor="middle">{xlabel}</text>')
    parts.append(f'<text x="18" y="{(_MT + _H - _MB) / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {(_MT + _H - _MB) / 2})">{ylabel}</text>')

    for i, (name, (low, high)) in enumerate(bands.items()):
        fwd = pts(x, low)
        back = pts(list(reversed(list(x))), list(reversed(list(high))))
        if fwd and back:
            color = colors[i % len(colors)]
            parts.append(f'<polygon points="{fwd} {back}" fill="{color}" opacity="0.15"/>')
    legend_y = _MT + 6
    for i, (name, ys) in enumerate(series.items()):
        color = colors[i % len(colors)]
        parts.append(f'<polyline points="{pts(x, ys)}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        parts.append(f'<text x="{_W - _MR - 150}" y="{legend_y}" fill="{color}">{name}</text>')
        legend_y += 16
    for j, (name, ys) in enumerate(reference.items()):
        color = colors[(len(series) + j) % len(colors)]
        parts.append(f'<polyline points="{pts(x, ys)}" fill="none" stroke="{color}" '
                     f'stroke-width="1.4" stroke-dasharray="6 4"/>')
        parts.append(f'<text x="{_W - _MR - 150}" y="{legend_y}" fill="{color}">{name}</text>')
        legend_y += 16

    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
