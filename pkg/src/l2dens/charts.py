"""Standalone SVG charts, emitted without plotting dependencies.

Output is a deterministic function of the input data: fixed canvas sizes,
fixed float formatting, no timestamps, so repeated runs produce identical
bytes.  Two chart kinds: a two-panel line plot per simulation design
(coverage on the left, scaled error against the efficiency bound on the
right) and a ranked dot-and-interval chart for per-category estimates with
both intervals drawn in different colors.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["SvgCanvas", "sim_chart", "ranking_chart"]

KERNEL_COLOR = "#d95f02"
TMLE_COLOR = "#1b9e77"
_AXIS = "#444444"
_GRID = "#cccccc"
_TEXT = "#222222"


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class SvgCanvas:
    """Collects shape elements and renders a standalone SVG document."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.elements: list[str] = [
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>'
        ]

    def line(self, x1, y1, x2, y2, stroke=_AXIS, width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.elements.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}"'
            f' stroke="{stroke}" stroke-width="{_fmt(width)}"{d}/>'
        )

    def polyline(self, points, stroke, width=1.5, dash=None):
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.elements.append(
            f'<polyline points="{pts}" fill="none" stroke="{stroke}"'
            f' stroke-width="{_fmt(width)}"{d}/>'
        )

    def circle(self, cx, cy, r, fill):
        self.elements.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="{fill}"/>'
        )

    def text(self, x, y, s, size=12, anchor="start", fill=_TEXT):
        self.elements.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="{size}"'
            f' font-family="sans-serif" text-anchor="{anchor}"'
            f' fill="{fill}">{escape(str(s))}</text>'
        )

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}"'
            f' height="{self.height}" viewBox="0 0 {self.width} {self.height}">'
        )
        return "\n".join([head, *self.elements, "</svg>"]) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.render())


class _Panel:
    """Maps data coordinates into a rectangular screen region."""

    def __init__(self, canvas, x0, y0, width, height, xlim, ylim):
        self.canvas = canvas
        self.x0, self.y0 = x0, y0
        self.w, self.h = width, height
        self.xlim, self.ylim = xlim, ylim

    def sx(self, x: float) -> float:
        lo, hi = self.xlim
        frac = 0.5 if hi == lo else (x - lo) / (hi - lo)
        return self.x0 + frac * self.w

    def sy(self, y: float) -> float:
        lo, hi = self.ylim
        frac = 0.5 if hi == lo else (y - lo) / (hi - lo)
        return self.y0 + self.h - frac * self.h

    def frame(self, title, xticks, xtick_labels, yticks):
        c = self.canvas
        c.line(self.x0, self.y0 + self.h, self.x0 + self.w, self.y0 + self.h)
        c.line(self.x0, self.y0, self.x0, self.y0 + self.h)
        c.text(self.x0 + self.w / 2, self.y0 - 10, title, size=13, anchor="middle")
        for xv, lab in zip(xticks, xtick_labels):
            px = self.sx(xv)
            c.line(px, self.y0 + self.h, px, self.y0 + self.h + 4)
            c.text(px, self.y0 + self.h + 17, lab, size=10, anchor="middle")
        for yv in yticks:
            py = self.sy(yv)
            c.line(self.x0 - 4, py, self.x0, py)
            c.line(self.x0, py, self.x0 + self.w, py, stroke=_GRID, width=0.5)
            c.text(self.x0 - 7, py + 3.5, _fmt(yv), size=10, anchor="end")

    def series(self, xs, ys, color, dash=None):
        pts = [(self.sx(x), self.sy(y)) for x, y in zip(xs, ys)]
        if len(pts) > 1:
            self.canvas.polyline(pts, stroke=color, dash=dash)
        for px, py in pts:
            self.canvas.circle(px, py, 2.4, color)

    def hline(self, y, color, dash="5,4"):
        py = self.sy(y)
        self.canvas.line(self.x0, py, self.x0 + self.w, py, stroke=color, dash=dash)


def _yticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [float(v) for v in np.linspace(lo, hi, count)]


def sim_chart(results, path, level: float = 0.95) -> None:
    """Two-panel chart for one design's ladder results.

    Left: oracle (solid) and sample (dashed) coverage per method against the
    nominal level.  Right: MSE and variance scaled by total observations,
    per method, against the efficiency bound.  ``results`` are SimResult-like
    rows for a single design, both methods.
    """
    rows = sorted(results, key=lambda r: (r.n, r.method))
    if not rows:
        raise ValueError("no results to plot")
    design = rows[0].design
    ns = sorted({r.n for r in rows})
    xs = [float(np.log2(n)) for n in ns]
    xlim = (xs[0] - 0.3, xs[-1] + 0.3)

    def cells(method):
        by_n = {r.n: r for r in rows if r.method == method}
        return [by_n[n] for n in ns]

    canvas = SvgCanvas(960, 430)
    canvas.text(480, 24, f"design: {design}", size=15, anchor="middle")

    cov_vals = [
        v for r in rows for v in (r.coverage_oracle, r.coverage_sample)
    ]
    cov_lo = min(0.5, min(cov_vals) - 0.05)
    cov_panel = _Panel(canvas, 70, 60, 380, 290, xlim, (max(0.0, cov_lo), 1.02))
    cov_panel.frame(
        "coverage of 95% intervals",
        xs,
        [str(n) for n in ns],
        _yticks(max(0.0, cov_lo), 1.0),
    )
    cov_panel.hline(level, _AXIS)
    for method, color in (("kernel", KERNEL_COLOR), ("tmle", TMLE_COLOR)):
        cc = cells(method)
        cov_panel.series(xs, [r.coverage_oracle for r in cc], color)
        cov_panel.series(xs, [r.coverage_sample for r in cc], color, dash="5,4")

    err_vals = [v for r in rows for v in (r.mse_times_n, r.var_times_n)]
    err_hi = max(err_vals + [rows[0].efficiency_bound]) * 1.08
    err_panel = _Panel(canvas, 540, 60, 380, 290, xlim, (0.0, err_hi))
    err_panel.frame(
        "error scaled by observations",
        xs,
        [str(n) for n in ns],
        _yticks(0.0, err_hi),
    )
    err_panel.hline(rows[0].efficiency_bound, _AXIS)
    for method, color in (("kernel", KERNEL_COLOR), ("tmle", TMLE_COLOR)):
        cc = cells(method)
        err_panel.series(xs, [r.mse_times_n for r in cc], color)
        err_panel.series(xs, [r.var_times_n for r in cc], color, dash="5,4")

    canvas.text(260, 385, "n per arm", size=11, anchor="middle")
    canvas.text(730, 385, "n per arm", size=11, anchor="middle")
    canvas.circle(70, 405, 3, KERNEL_COLOR)
    canvas.text(80, 409, "kernel (solid: oracle / MSE, dashed: sample / Var)", size=11)
    canvas.circle(70, 421, 3, TMLE_COLOR)
    canvas.text(80, 425, "tmle, same line styles; thin dashed: reference", size=11)
    canvas.write(path)


def ranking_chart(rows, path) -> None:
    """Dot-and-interval chart of per-category estimates, ranked top-down.

    ``rows`` are CategoryResult-like records already sorted for display;
    each gets its kernel interval and targeted interval in distinct colors.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("no categories to plot")
    left, right_pad, row_h = 230, 40, 30
    top, bottom = 50, 55
    width = 900
    height = top + row_h * len(rows) + bottom
    canvas = SvgCanvas(width, height)
    canvas.text(width / 2, 24, "squared L2 distance by category", size=15, anchor="middle")

    los, his = [], []
    for row in rows:
        rep = row.report
        los += [rep.ci_kernel[0], rep.ci_tmle[0]]
        his += [rep.ci_kernel[1], rep.ci_tmle[1]]
    xlo = min(los + [0.0])
    xhi = max(his)
    span = (xhi - xlo) or 1.0
    xlim = (xlo - 0.04 * span, xhi + 0.04 * span)

    panel = _Panel(canvas, left, top, width - left - right_pad, row_h * len(rows), xlim, (0, 1))
    xticks = _yticks(xlim[0], xlim[1], 6)
    canvas.line(left, top + row_h * len(rows), width - right_pad, top + row_h * len(rows))
    for xv in xticks:
        px = panel.sx(xv)
        canvas.line(px, top + row_h * len(rows), px, top + row_h * len(rows) + 4)
        canvas.text(px, top + row_h * len(rows) + 17, _fmt(xv), size=10, anchor="middle")
    if xlim[0] < 0.0 < xlim[1]:
        px = panel.sx(0.0)
        canvas.line(px, top, px, top + row_h * len(rows), stroke=_GRID)

    for i, row in enumerate(rows):
        rep = row.report
        yk = top + row_h * i + row_h * 0.38
        yt = top + row_h * i + row_h * 0.72
        canvas.text(left - 10, yk + 6, row.category, size=11, anchor="end")
        canvas.line(panel.sx(rep.ci_kernel[0]), yk, panel.sx(rep.ci_kernel[1]), yk,
                    stroke=KERNEL_COLOR, width=1.6)
        canvas.circle(panel.sx(rep.psi_kernel), yk, 3.0, KERNEL_COLOR)
        canvas.line(panel.sx(rep.ci_tmle[0]), yt, panel.sx(rep.ci_tmle[1]), yt,
                    stroke=TMLE_COLOR, width=1.6)
        canvas.circle(panel.sx(rep.psi_tmle), yt, 3.0, TMLE_COLOR)

    ybase = height - 18
    canvas.circle(left, ybase - 4, 3, KERNEL_COLOR)
    canvas.text(left + 10, ybase, "kernel estimate with interval", size=11)
    canvas.circle(left + 240, ybase - 4, 3, TMLE_COLOR)
    canvas.text(left + 250, ybase, "targeted estimate with interval", size=11)
    canvas.write(path)
