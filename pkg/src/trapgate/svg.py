"""Minimal static SVG charts: axes, histogram bars, step CDF and polylines."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=70, top=40, bottom=55)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


class _Canvas:
    def __init__(self, xlim, ylim, title, xlabel, ylabel):
        self.x0, self.x1 = _pad(xlim)
        self.y0, self.y1 = _pad(ylim)
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
            f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>',
            f'<text transform="translate(18,{HEIGHT / 2}) rotate(-90)" text-anchor="middle">{escape(ylabel)}</text>',
        ]
        self._axes()

    @property
    def plot_box(self):
        return (MARGIN["left"], MARGIN["top"], WIDTH - MARGIN["right"], HEIGHT - MARGIN["bottom"])

    def px(self, x):
        left, _, right, _ = self.plot_box
        return left + (x - self.x0) / (self.x1 - self.x0) * (right - left)

    def py(self, y, y0=None, y1=None):
        y0 = self.y0 if y0 is None else y0
        y1 = self.y1 if y1 is None else y1
        _, top, _, bottom = self.plot_box
        return bottom - (y - y0) / (y1 - y0) * (bottom - top)

    def _axes(self):
        left, top, right, bottom = self.plot_box
        self.parts.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
                          'fill="none" stroke="black"/>')
        for x in np.linspace(self.x0, self.x1, 6):
            self.parts.append(f'<text x="{self.px(x):.1f}" y="{bottom + 18}" text-anchor="middle">{x:.4g}</text>')
        for y in np.linspace(self.y0, self.y1, 6):
            self.parts.append(f'<text x="{left - 6}" y="{self.py(y) + 4:.1f}" text-anchor="end">{y:.4g}</text>')

    def right_axis(self, label, lo=0.0, hi=1.0):
        _, top, right, bottom = self.plot_box
        for y in np.linspace(lo, hi, 6):
            self.parts.append(f'<text x="{right + 6}" y="{self.py(y, lo, hi) + 4:.1f}">{y:.2g}</text>')
        self.parts.append(f'<text transform="translate({WIDTH - 16},{HEIGHT / 2}) rotate(90)" '
                          f'text-anchor="middle">{escape(label)}</text>')

    def polyline(self, xs, ys, color, y0=None, y1=None, width=1.5):
        pts = " ".join(f"{self.px(x):.2f},{self.py(y, y0, y1):.2f}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def bars(self, edges, counts, color):
        for a, b, c in zip(edges[:-1], edges[1:], counts):
            x, w = self.px(a), max(self.px(b) - self.px(a), 0.5)
            y = self.py(c)
            self.parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{self.py(self.y0) - y:.2f}" '
                              f'fill="{color}" fill-opacity="0.6" stroke="{color}"/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _pad(lim):
    lo, hi = float(lim[0]), float(lim[1])
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def histogram_with_cdf(edges, counts, cdf, title: str, xlabel: str) -> str:
    """Bars on the left axis, cumulative fraction as a step curve on the right axis."""
    edges = np.asarray(edges, float)
    canvas = _Canvas((edges[0], edges[-1]), (0, max(1, int(np.max(counts)))), title, xlabel, "devices")
    canvas.bars(edges, counts, PALETTE[0])
    xs = np.repeat(edges, 2)[1:]
    ys = np.repeat(np.asarray(cdf, float), 2)[:-1]
    canvas.polyline(xs, ys, PALETTE[1], 0.0, 1.0)
    canvas.right_axis("cumulative fraction")
    return canvas.render()


def bar_chart(xs, heights, title: str, xlabel: str, ylabel: str) -> str:
    xs = np.asarray(xs, float)
    canvas = _Canvas((xs.min() - 0.5, xs.max() + 0.5), (0, max(1, float(np.max(heights)))), title, xlabel, ylabel)
    for x, h in zip(xs, heights):
        canvas.bars(np.array([x - 0.4, x + 0.4]), [h], PALETTE[0])
    return canvas.render()


def line_chart(x, series, title: str, xlabel: str, ylabel: str) -> str:
    """One polyline per column of ``series`` (shape n_points x n_lines)."""
    x = np.asarray(x, float)
    series = np.atleast_2d(np.asarray(series, float).T).T
    canvas = _Canvas((x.min(), x.max()), (np.min(series), np.max(series)), title, xlabel, ylabel)
    for k in range(series.shape[1]):
        canvas.polyline(x, series[:, k], PALETTE[k % len(PALETTE)], width=1.0)
    return canvas.render()
