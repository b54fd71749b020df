"""Dependency-free SVG plots: line charts and 2-D scatter plots.

Output is a pure function of the input numbers, so re-plotting the same CSV
gives the same bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=50)


def _num(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _bounds(values, pad=0.05):
    arr = np.asarray([v for v in values if v is not None and math.isfinite(v)], dtype=float)
    if arr.size == 0:
        return 0.0, 1.0
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    return lo - pad * span, hi + pad * span


class _Canvas:
    def __init__(self, title, xlabel, ylabel, xlim, ylim):
        self.xlim, self.ylim = xlim, ylim
        self.x0, self.x1 = MARGIN["left"], WIDTH - MARGIN["right"]
        self.y0, self.y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2 - MARGIN["right"] / 2:.0f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
            f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" height="{self.y0 - self.y1}" '
            'fill="none" stroke="#333"/>',
        ]
        for tx in _ticks(*xlim):
            px = self.px(tx)
            self.parts.append(f'<line x1="{_num(px)}" y1="{self.y0}" x2="{_num(px)}" y2="{self.y0 + 4}" stroke="#333"/>')
            self.parts.append(f'<text x="{_num(px)}" y="{self.y0 + 16}" text-anchor="middle">{tx:.4g}</text>')
        for ty in _ticks(*ylim):
            py = self.py(ty)
            self.parts.append(f'<line x1="{self.x0 - 4}" y1="{_num(py)}" x2="{self.x0}" y2="{_num(py)}" stroke="#333"/>')
            self.parts.append(f'<text x="{self.x0 - 6}" y="{_num(py + 4)}" text-anchor="end">{ty:.4g}</text>')
        self.parts.append(
            f'<text x="{(self.x0 + self.x1) / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>'
        )
        self.parts.append(
            f'<text x="16" y="{(self.y0 + self.y1) / 2:.0f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {(self.y0 + self.y1) / 2:.0f})">{escape(ylabel)}</text>'
        )
        self._legend = 0

    def px(self, x):
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo) * (self.x1 - self.x0)

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 - (y - lo) / (hi - lo) * (self.y0 - self.y1)

    def legend(self, label, color):
        y = self.y1 + 10 + 18 * self._legend
        x = self.x1 + 12
        self.parts.append(f'<rect x="{x}" y="{y - 8}" width="12" height="8" fill="{color}"/>')
        self.parts.append(f'<text x="{x + 18}" y="{y}">{escape(label)}</text>')
        self._legend += 1

    def finish(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_plot(series: dict[str, tuple], title="", xlabel="", ylabel="", hlines=None) -> str:
    """``series`` maps a label to ``(x, y)`` sequences; missing y values are skipped."""
    xs = [x for xv, _ in series.values() for x in xv]
    ys = [y for _, yv in series.values() for y in yv]
    for _, y in (hlines or {}).items():
        ys.append(y)
    canvas = _Canvas(title, xlabel, ylabel, _bounds(xs, pad=0.0), _bounds(ys))
    for i, (label, (xv, yv)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = [
            f"{_num(canvas.px(x))},{_num(canvas.py(y))}"
            for x, y in zip(xv, yv)
            if y is not None and math.isfinite(y)
        ]
        if pts:
            canvas.parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        canvas.legend(label, color)
    for label, y in (hlines or {}).items():
        py = _num(canvas.py(y))
        canvas.parts.append(
            f'<line x1="{canvas.x0}" y1="{py}" x2="{canvas.x1}" y2="{py}" stroke="#777" stroke-dasharray="4 3"/>'
        )
        canvas.legend(label, "#777")
    return canvas.finish()


def scatter_plot(groups: dict[str, np.ndarray], title="", max_points=2048) -> str:
    """2-D scatter of each group's first two columns."""
    arrays = {k: np.asarray(v, dtype=float)[:max_points, :2] for k, v in groups.items()}
    allx = np.concatenate([a[:, 0] for a in arrays.values()])
    ally = np.concatenate([a[:, 1] for a in arrays.values()])
    canvas = _Canvas(title, "x0", "x1", _bounds(allx), _bounds(ally))
    for i, (label, a) in enumerate(arrays.items()):
        color = PALETTE[i % len(PALETTE)]
        dots = "".join(
            f'<circle cx="{_num(canvas.px(x))}" cy="{_num(canvas.py(y))}" r="1.2"/>'
            for x, y in a
            if math.isfinite(x) and math.isfinite(y)
        )
        canvas.parts.append(f'<g fill="{color}" fill-opacity="0.5">{dots}</g>')
        canvas.legend(label, color)
    return canvas.finish()


def runlog_plot(csv_text: str, metric: str = "sliced_wasserstein", title="") -> str:
    """Plot one RunLog column straight from CSV text."""
    from .gan import RunLog

    log = RunLog.from_csv(csv_text)
    return line_plot({metric: (log.column("iteration"), log.column(metric))}, title, "iteration", metric)
