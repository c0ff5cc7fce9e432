"""Deterministic CSV tables and self-contained SVG plots."""
from __future__ import annotations

import csv
import io
import math
from html import escape

import numpy as np

# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def format_value(v) -> str:
    """Stable text for one cell: shortest round-trip repr for floats."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(path, rows, columns=None) -> None:
    """Write dict rows with ``\\n`` line endings and fixed column order."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in columns])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_csv(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_VIRIDIS = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98],
                     [253, 231, 37]], float)
_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def colormap(t) -> str:
    """Viridis-like colour for ``t`` in [0, 1] (piecewise-linear anchors)."""
    t = float(np.clip(t, 0.0, 1.0)) if np.isfinite(t) else 0.0
    x = t * (len(_VIRIDIS) - 1)
    i = min(int(x), len(_VIRIDIS) - 2)
    c = _VIRIDIS[i] + (x - i) * (_VIRIDIS[i + 1] - _VIRIDIS[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


class _Canvas:
    def __init__(self, width=480, height=360, margin=(50, 20, 40, 60), title=""):
        self.w, self.h = width, height
        self.mt, self.mr, self.mb, self.ml = margin
        self.parts = []
        self.title = title

    def frame(self, xlim, ylim, xlabel="", ylabel="", xticks=None, yticks=None, xfmt="{:.3g}"):
        self.xlim, self.ylim = xlim, ylim
        x0, y0 = self.ml, self.mt
        pw, ph = self.w - self.ml - self.mr, self.h - self.mt - self.mb
        self.parts.append(f'<rect x="{x0}" y="{y0}" width="{pw}" height="{ph}" '
                          'fill="none" stroke="#444"/>')
        for v in (xticks if xticks is not None else np.linspace(*xlim, 5)):
            px = self.px(v)
            self.parts.append(f'<line x1="{px:.2f}" y1="{y0 + ph}" x2="{px:.2f}" '
                              f'y2="{y0 + ph + 4}" stroke="#444"/>')
            self.text(px, y0 + ph + 16, xfmt.format(v), anchor="middle", size=10)
        for v in (yticks if yticks is not None else np.linspace(*ylim, 5)):
            py = self.py(v)
            self.parts.append(f'<line x1="{x0 - 4}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" '
                              'stroke="#444"/>')
            self.text(x0 - 6, py + 3, f"{v:.3g}", anchor="end", size=10)
        if xlabel:
            self.text(x0 + pw / 2, self.h - 8, xlabel, anchor="middle")
        if ylabel:
            self.parts.append(f'<text x="14" y="{y0 + ph / 2:.2f}" font-size="12" '
                              f'text-anchor="middle" transform="rotate(-90 14 {y0 + ph / 2:.2f})">'
                              f'{escape(ylabel)}</text>')

    def px(self, v):
        a, b = self.xlim
        return self.ml + (v - a) / ((b - a) or 1.0) * (self.w - self.ml - self.mr)

    def py(self, v):
        a, b = self.ylim
        return self.h - self.mb - (v - a) / ((b - a) or 1.0) * (self.h - self.mt - self.mb)

    def text(self, x, y, s, anchor="start", size=12):
        self.parts.append(f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" '
                          f'text-anchor="{anchor}">{escape(str(s))}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}" font-family="sans-serif">')
        body = [f'<rect width="{self.w}" height="{self.h}" fill="white"/>']
        if self.title:
            body.append(f'<text x="{self.w / 2:.2f}" y="20" font-size="14" '
                        f'text-anchor="middle">{escape(self.title)}</text>')
        return "\n".join([head, *body, *self.parts, "</svg>"]) + "\n"


def _limits(v, pad=0.05):
    v = np.asarray(v, float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return (0.0, 1.0)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return (lo - pad * span, hi + pad * span)


def svg_scatter(path, x, y, color_values=None, title="", xlabel="", ylabel="", radius=3.0):
    """Scatter plot, points coloured by ``color_values`` on a viridis ramp."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    cv = None if color_values is None else np.asarray(color_values, float)
    c = _Canvas(title=title)
    c.frame(_limits(x), _limits(y), xlabel, ylabel)
    if cv is not None and cv.size:
        lo, hi = np.nanmin(cv), np.nanmax(cv)
        t = (cv - lo) / ((hi - lo) or 1.0)
    for i in range(len(x)):
        if not (np.isfinite(x[i]) and np.isfinite(y[i])):
            continue
        fill = colormap(t[i]) if cv is not None else _PALETTE[0]
        c.parts.append(f'<circle cx="{c.px(x[i]):.2f}" cy="{c.py(y[i]):.2f}" r="{radius}" '
                       f'fill="{fill}" fill-opacity="0.85"/>')
    _write(path, c.render())


def svg_bars(path, labels, values, errors=None, title="", ylabel="", reference=None):
    """Vertical bar chart with optional symmetric error bars and a reference line."""
    values = np.asarray(values, float)
    n = len(values)
    top = np.nanmax(np.concatenate([values + (np.asarray(errors, float) if errors is not None else 0),
                                    [reference if reference is not None else 0.0]])) if n else 1.0
    c = _Canvas(title=title)
    c.frame((0, max(n, 1)), (0.0, float(top) * 1.1 if top > 0 else 1.0), "", ylabel, xticks=[])
    bw = (c.w - c.ml - c.mr) / max(n, 1) * 0.6
    for i, (lab, v) in enumerate(zip(labels, values)):
        cx = c.px(i + 0.5)
        y = c.py(max(v, 0.0)) if np.isfinite(v) else c.py(0)
        c.parts.append(f'<rect x="{cx - bw / 2:.2f}" y="{y:.2f}" width="{bw:.2f}" '
                       f'height="{c.py(0) - y:.2f}" fill="{_PALETTE[i % len(_PALETTE)]}"/>')
        if errors is not None and np.isfinite(errors[i]):
            e = float(errors[i])
            c.parts.append(f'<line x1="{cx:.2f}" y1="{c.py(v - e):.2f}" x2="{cx:.2f}" '
                           f'y2="{c.py(v + e):.2f}" stroke="black"/>')
        c.text(cx, c.h - c.mb + 16, lab, anchor="middle", size=10)
    if reference is not None:
        ry = c.py(reference)
        c.parts.append(f'<line x1="{c.ml}" y1="{ry:.2f}" x2="{c.w - c.mr}" y2="{ry:.2f}" '
                       'stroke="#888" stroke-dasharray="4 3"/>')
    _write(path, c.render())


def svg_lines(path, series: dict, title="", xlabel="", ylabel=""):
    """Line plot; ``series`` maps a name to ``(x, y)`` or ``(x, y, err)``."""
    xs = np.concatenate([np.asarray(s[0], float) for s in series.values()]) if series else [0, 1]
    ys = []
    for s in series.values():
        y = np.asarray(s[1], float)
        e = np.asarray(s[2], float) if len(s) > 2 else 0 * y
        ys.extend([y - e, y + e])
    ys = np.concatenate(ys) if ys else [0, 1]
    c = _Canvas(title=title, margin=(50, 110, 40, 60))
    xticks = np.unique(np.asarray(series[next(iter(series))][0], float)) if series else None
    c.frame(_limits(xs), _limits(ys), xlabel, ylabel, xticks=xticks)
    for k, (name, s) in enumerate(series.items()):
        col = _PALETTE[k % len(_PALETTE)]
        x, y = np.asarray(s[0], float), np.asarray(s[1], float)
        pts = " ".join(f"{c.px(a):.2f},{c.py(b):.2f}" for a, b in zip(x, y))
        c.parts.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="2"/>')
        for i, (a, b) in enumerate(zip(x, y)):
            c.parts.append(f'<circle cx="{c.px(a):.2f}" cy="{c.py(b):.2f}" r="3" fill="{col}"/>')
            if len(s) > 2:
                e = float(s[2][i])
                c.parts.append(f'<line x1="{c.px(a):.2f}" y1="{c.py(b - e):.2f}" '
                               f'x2="{c.px(a):.2f}" y2="{c.py(b + e):.2f}" stroke="{col}"/>')
        c.text(c.w - c.mr + 8, c.mt + 14 + 16 * k, name, size=11)
    _write(path, c.render())


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)
