"""Minimal self-contained SVG line/bar charts with stable element ids."""

from __future__ import annotations

import math
from html import escape
from typing import Sequence

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if math.isfinite(v) else "0"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * span:
        ticks.append(round(first + k * step, 10))
        k += 1
    return ticks


def diverging_color(value: float, limit: float = 1.0) -> str:
    """Blue for negative, red for positive, white at zero."""
    f = max(-1.0, min(1.0, value / limit if limit else 0.0))
    if f >= 0:
        r, g, b = 255, int(255 * (1 - f)), int(255 * (1 - f))
    else:
        r, g, b = int(255 * (1 + f)), int(255 * (1 + f)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


class Chart:
    def __init__(
        self,
        title: str,
        xlabel: str,
        ylabel: str,
        *,
        width: int = 640,
        height: int = 400,
        chart_id: str = "chart",
    ):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.width, self.height = width, height
        self.chart_id = chart_id
        self.margin = (60, 20, 40, 50)  # left, right, top, bottom
        self._items: list[tuple[str, dict]] = []
        self._xs: list[float] = []
        self._ys: list[float] = []
        self._legend: list[tuple[str, str, str]] = []

    def _extend(self, points: Sequence[tuple[float, float]]) -> None:
        for x, y in points:
            self._xs.append(x)
            self._ys.append(y)

    def line(self, points, *, color="#000000", width=1.0, dash: str | None = None, label: str | None = None):
        pts = [(float(x), float(y)) for x, y in points if y is not None]
        self._extend(pts)
        self._items.append(("line", dict(points=pts, color=color, width=width, dash=dash)))
        if label:
            self._legend.append((label, color, dash or ""))

    def hline(self, y: float, *, color="#000000", dash="6,4", label: str | None = None):
        self._ys.append(float(y))
        self._items.append(("hline", dict(y=float(y), color=color, dash=dash)))
        if label:
            self._legend.append((label, color, dash))

    def band(self, upper, lower, *, color="#1f77b4", opacity=0.25):
        up = [(float(x), float(y)) for x, y in upper]
        lo = [(float(x), float(y)) for x, y in lower]
        self._extend(up + lo)
        self._items.append(("band", dict(points=up + lo[::-1], color=color, opacity=opacity)))

    def bars(self, bins, *, color="#1f77b4", label: str | None = None, slot: int = 0, slots: int = 1):
        """``bins`` are (start, end, height) triples; ``slot`` splits a bin between series."""
        data = [(float(s), float(e), float(h)) for s, e, h in bins]
        for s, e, h in data:
            self._extend([(s, 0.0), (e, h)])
        self._items.append(("bars", dict(bins=data, color=color, slot=slot, slots=slots)))
        if label:
            self._legend.append((label, color, ""))

    def points(self, points, colors: Sequence[str], *, radius=3.5):
        pts = [(float(x), float(y)) for x, y in points]
        self._extend(pts)
        self._items.append(("points", dict(points=pts, colors=list(colors), radius=radius)))

    def _ranges(self):
        xs, ys = self._xs or [0.0, 1.0], self._ys or [0.0, 1.0]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(min(ys), 0.0), max(ys)
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y1 = y0 + 1
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - (pad if y0 < 0 else 0), y1 + pad

    def render(self) -> str:
        x0, x1, y0, y1 = self._ranges()
        left, right, top, bottom = self.margin
        pw, ph = self.width - left - right, self.height - top - bottom

        def sx(x):
            return left + (x - x0) / (x1 - x0) * pw

        def sy(y):
            return top + ph - (y - y0) / (y1 - y0) * ph

        cid = self.chart_id
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" id="{cid}" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}" '
            f'font-family="sans-serif" font-size="11">',
            f'<rect id="{cid}-bg" x="0" y="0" width="{self.width}" height="{self.height}" fill="#ffffff"/>',
            f'<text id="{cid}-title" x="{self.width / 2:.1f}" y="20" text-anchor="middle" '
            f'font-size="14">{escape(self.title)}</text>',
        ]
        for i, (kind, d) in enumerate(self._items):
            eid = f"{cid}-{kind}-{i}"
            if kind == "line" and d["points"]:
                pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in d["points"])
                dash = f' stroke-dasharray="{d["dash"]}"' if d["dash"] else ""
                out.append(
                    f'<polyline id="{eid}" fill="none" stroke="{d["color"]}" '
                    f'stroke-width="{d["width"]}"{dash} points="{pts}"/>'
                )
            elif kind == "hline":
                y = _fmt(sy(d["y"]))
                out.append(
                    f'<line id="{eid}" x1="{left}" y1="{y}" x2="{left + pw}" y2="{y}" '
                    f'stroke="{d["color"]}" stroke-dasharray="{d["dash"]}"/>'
                )
            elif kind == "band" and d["points"]:
                pts = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in d["points"])
                out.append(
                    f'<polygon id="{eid}" fill="{d["color"]}" fill-opacity="{d["opacity"]}" '
                    f'stroke="none" points="{pts}"/>'
                )
            elif kind == "bars":
                for j, (s, e, h) in enumerate(d["bins"]):
                    w = (e - s) / d["slots"]
                    bs = s + d["slot"] * w
                    xa, xb = sx(bs), sx(bs + w)
                    out.append(
                        f'<rect id="{eid}-{j}" x="{_fmt(xa)}" y="{_fmt(sy(h))}" '
                        f'width="{_fmt(max(xb - xa - 1, 0.5))}" height="{_fmt(sy(0) - sy(h))}" '
                        f'fill="{d["color"]}"/>'
                    )
            elif kind == "points":
                for j, ((x, y), c) in enumerate(zip(d["points"], d["colors"])):
                    out.append(
                        f'<circle id="{eid}-{j}" cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" '
                        f'r="{d["radius"]}" fill="{c}" stroke="#333333" stroke-width="0.5"/>'
                    )
        # axes
        out.append(
            f'<g id="{cid}-axes" stroke="#000000">'
            f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}"/>'
            f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}"/></g>'
        )
        ticks = [f'<g id="{cid}-ticks">']
        for t in _nice_ticks(x0, x1):
            x = _fmt(sx(t))
            ticks.append(
                f'<line x1="{x}" y1="{top + ph}" x2="{x}" y2="{top + ph + 4}" stroke="#000000"/>'
                f'<text x="{x}" y="{top + ph + 16}" text-anchor="middle">{_fmt(t)}</text>'
            )
        for t in _nice_ticks(y0, y1):
            y = _fmt(sy(t))
            ticks.append(
                f'<line x1="{left - 4}" y1="{y}" x2="{left}" y2="{y}" stroke="#000000"/>'
                f'<text x="{left - 6}" y="{y}" text-anchor="end" dominant-baseline="middle">{_fmt(t)}</text>'
            )
        ticks.append("</g>")
        out.extend(ticks)
        out.append(
            f'<text id="{cid}-xlabel" x="{left + pw / 2:.1f}" y="{self.height - 8}" '
            f'text-anchor="middle">{escape(self.xlabel)}</text>'
        )
        out.append(
            f'<text id="{cid}-ylabel" x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(self.ylabel)}</text>'
        )
        if self._legend:
            out.append(f'<g id="{cid}-legend">')
            for i, (label, color, dash) in enumerate(self._legend):
                y = top + 10 + 14 * i
                x = left + pw - 150
                d = f' stroke-dasharray="{dash}"' if dash else ""
                out.append(
                    f'<line x1="{x}" y1="{y}" x2="{x + 20}" y2="{y}" stroke="{color}" stroke-width="2"{d}/>'
                    f'<text x="{x + 26}" y="{y}" dominant-baseline="middle">{escape(label)}</text>'
                )
            out.append("</g>")
        out.append("</svg>")
        return "\n".join(out) + "\n"
