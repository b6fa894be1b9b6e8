"""Tiny deterministic SVG writer and the handful of charts the package emits.

Only line, polyline, circle, rect and text elements are used; coordinates are
rounded to two decimals so identical inputs give identical bytes.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np
import pandas as pd


def _f(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


class Canvas:
    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.items: list[str] = []

    def _attrs(self, attrs):
        return "".join(f' {k.replace("_", "-")}="{escape(str(v))}"' for k, v in attrs.items())

    def line(self, x1, y1, x2, y2, stroke="black", **attrs):
        self.items.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" stroke="{stroke}"{self._attrs(attrs)}/>'
        )

    def polyline(self, points, stroke="black", **attrs):
        pts = " ".join(f"{_f(x)},{_f(y)}" for x, y in points)
        self.items.append(f'<polyline points="{pts}" fill="none" stroke="{stroke}"{self._attrs(attrs)}/>')

    def circle(self, cx, cy, r=3, fill="black", **attrs):
        self.items.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(r)}" fill="{fill}"{self._attrs(attrs)}/>')

    def rect(self, x, y, w, h, fill="none", **attrs):
        self.items.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" fill="{fill}"{self._attrs(attrs)}/>'
        )

    def text(self, x, y, s, size=11, anchor="start", **attrs):
        self.items.append(
            f'<text x="{_f(x)}" y="{_f(y)}" font-size="{_f(size)}" text-anchor="{anchor}"'
            f' font-family="sans-serif"{self._attrs(attrs)}>{escape(str(s))}</text>'
        )

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(self.width)}" height="{_f(self.height)}"'
            f' viewBox="0 0 {_f(self.width)} {_f(self.height)}">'
        )
        return "\n".join([head, *self.items, "</svg>"]) + "\n"


def nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(round(v, 10))
        v += step
    return ticks


class Axes:
    """Maps data coordinates into a pixel box on a canvas."""

    def __init__(self, canvas, x, y, w, h, xlim, ylim):
        self.c = canvas
        self.x, self.y, self.w, self.h = x, y, w, h
        pad = lambda a, b: (a - 0.5, b + 0.5) if a == b else (a, b)
        self.xlim = pad(*xlim)
        self.ylim = pad(*ylim)

    def px(self, v):
        a, b = self.xlim
        return self.x + (v - a) / (b - a) * self.w

    def py(self, v):
        a, b = self.ylim
        return self.y + self.h - (v - a) / (b - a) * self.h

    def frame(self, xticks=None, yticks=None, xfmt=str, yfmt="{:g}".format, size=9):
        self.c.rect(self.x, self.y, self.w, self.h, stroke="#444")
        for t in xticks if xticks is not None else nice_ticks(*self.xlim):
            X = self.px(t)
            self.c.line(X, self.y + self.h, X, self.y + self.h + 3, stroke="#444")
            self.c.text(X, self.y + self.h + 13, xfmt(t), size=size, anchor="middle")
        for t in yticks if yticks is not None else nice_ticks(*self.ylim):
            Y = self.py(t)
            self.c.line(self.x - 3, Y, self.x, Y, stroke="#444")
            self.c.text(self.x - 5, Y + 3, yfmt(t), size=size, anchor="end")

    def series(self, xs, ys, stroke="black", **attrs):
        pts = [(self.px(a), self.py(b)) for a, b in zip(xs, ys) if np.isfinite(b)]
        if pts:
            self.c.polyline(pts, stroke=stroke, **attrs)

    def vline(self, v, stroke="red", **attrs):
        self.c.line(self.px(v), self.y, self.px(v), self.y + self.h, stroke=stroke, **attrs)

    def hline(self, v, stroke="#888", **attrs):
        self.c.line(self.x, self.py(v), self.x + self.w, self.py(v), stroke=stroke, **attrs)

    def span(self, a, b, fill, opacity=0.25):
        self.c.rect(self.px(a), self.y, self.px(b) - self.px(a), self.h, fill=fill, fill_opacity=opacity)


def _day_axis(dates: pd.DatetimeIndex):
    """Day offsets plus quarterly tick positions/labels."""
    x = np.arange(len(dates), dtype=float)
    starts = [d for d in dates if d.day == 1 and d.month in (1, 4, 7, 10)]
    ticks = [float((d - dates[0]).days) for d in starts]
    labels = {t: d.strftime("%Y-%m") for t, d in zip(ticks, starts)}
    return x, ticks, lambda t: labels.get(t, "")


def phases_chart(curve: pd.Series, partition, title="Normalized COVID-19 deaths, all countries") -> str:
    c = Canvas(900, 360)
    c.text(450, 20, title, size=14, anchor="middle")
    x, ticks, fmt = _day_axis(curve.index)
    ax = Axes(c, 60, 35, 810, 280, (0, len(x) - 1), (0, float(np.nanmax(curve.to_numpy())) * 1.05))
    ax.frame(xticks=ticks, xfmt=fmt, yfmt="{:.3g}".format)
    ax.series(x, curve.to_numpy(), stroke="#1f4e9a")
    for b in partition.boundaries:
        ax.vline(float((b - curve.index[0]).days), stroke="red", stroke_dasharray="4 3")
    return c.render()


def waves_chart(dates: pd.DatetimeIndex, deaths, mask, waves, boundaries, title: str) -> str:
    """One country: deaths (left scale) and mask usage (right scale) with wave markup."""
    c = Canvas(900, 380)
    c.text(450, 20, title, size=14, anchor="middle")
    x, ticks, fmt = _day_axis(dates)
    deaths = np.asarray(deaths, dtype=float)
    top = float(np.nanmax(deaths)) if np.isfinite(deaths).any() else 1.0
    ax = Axes(c, 60, 35, 780, 300, (0, len(x) - 1), (0, top * 1.05 or 1.0))
    off = lambda d: float((d - dates[0]).days)
    for w in waves:
        ax.span(off(w.start), off(w.end) + 1, "#9ecae1", 0.35)
        ax.span(off(w.begin_window[0]), off(w.begin_window[1]) + 1, "#31a354", 0.45)
        ax.span(off(w.peak_window[0]), off(w.peak_window[1]) + 1, "#e6550d", 0.45)
    ax.frame(xticks=ticks, xfmt=fmt, yfmt="{:.3g}".format)
    ax.series(x, deaths, stroke="black")
    mask_ax = Axes(c, 60, 35, 780, 300, (0, len(x) - 1), (0, 100))
    mask_ax.series(x, np.asarray(mask, dtype=float), stroke="#756bb1", stroke_dasharray="3 2")
    for t in (0, 25, 50, 75, 100):
        c.text(845, mask_ax.py(t) + 3, f"{t}%", size=9)
    for b in boundaries:
        ax.vline(off(b), stroke="red", stroke_dasharray="4 3")
    c.text(60, 370, "deaths/million (black), mask % (purple); wave (blue), begin decile (green), peak decile (orange)", size=10)
    return c.render()


def scatter_chart(x, y, xlabel: str, ylabel: str, title: str = "", labels=None) -> str:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = Canvas(640, 480)
    if title:
        c.text(320, 20, title, size=13, anchor="middle")

    def lim(v):
        lo, hi = float(np.nanmin(v)), float(np.nanmax(v))
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        return lo - pad, hi + pad

    ax = Axes(c, 70, 35, 540, 380, lim(x), lim(y))
    ax.frame(xfmt="{:g}".format)
    for i, (a, b) in enumerate(zip(x, y)):
        if np.isfinite(a) and np.isfinite(b):
            c.circle(ax.px(a), ax.py(b), 3.5, fill="#1f4e9a", fill_opacity=0.8)
            if labels is not None:
                c.text(ax.px(a) + 5, ax.py(b) - 4, labels[i], size=8)
    c.text(340, 450, xlabel, size=12, anchor="middle")
    c.text(18, 225, ylabel, size=12, anchor="middle", transform=f"rotate(-90 18 225)")
    return c.render()


def residual_grid_chart(series: dict[str, pd.Series], title: str, ncols: int = 4) -> str:
    names = sorted(series)
    nrows = max(1, math.ceil(len(names) / ncols))
    pw, ph = 230, 150
    c = Canvas(ncols * pw + 20, nrows * ph + 40)
    c.text(c.width / 2, 20, title, size=14, anchor="middle")
    for k, name in enumerate(names):
        s = series[name]
        r, col = divmod(k, ncols)
        v = s.to_numpy(dtype=float)
        m = float(np.nanmax(np.abs(v))) if v.size and np.isfinite(v).any() else 1.0
        m = m or 1.0
        ax = Axes(c, 20 + col * pw + 35, 35 + r * ph + 15, pw - 50, ph - 40, (0, max(len(v) - 1, 1)), (-m, m))
        ax.frame(xticks=[], yticks=[-m, 0, m], yfmt="{:.2g}".format, size=8)
        ax.hline(0)
        ax.series(np.arange(len(v)), v, stroke="#1f4e9a")
        c.text(ax.x + ax.w / 2, ax.y - 4, name, size=10, anchor="middle")
    return c.render()
