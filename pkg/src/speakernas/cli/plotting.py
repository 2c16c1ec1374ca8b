"""Minimal SVG line plots for history CSVs.

Writes one polyline per column with full-precision coordinates and the
axis bounds recorded as ``data-*`` attributes on the root element, so
plotted values can be recovered exactly by inverting the affine axis
transform — handy for both tooling and regression checks.
"""

from __future__ import annotations

WIDTH = 720
HEIGHT = 440
MARGIN = 60
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _bounds(values):
    lo, hi = min(values), max(values)
    if lo == hi:
        hi = lo + 1.0
    return float(lo), float(hi)


def render_line_svg(xs, series: dict, title: str = "") -> str:
    """Plot {name: values} against shared xs; returns the SVG text."""
    if not series:
        raise ValueError("nothing to plot")
    n = len(xs)
    for name, ys in series.items():
        if len(ys) != n:
            raise ValueError(f"series {name!r}: {len(ys)} values for {n} xs")
    if n == 0:
        raise ValueError("empty series")
    xmin, xmax = _bounds(xs)
    ymin, ymax = _bounds([v for ys in series.values() for v in ys])
    sx = (WIDTH - 2 * MARGIN) / (xmax - xmin)
    sy = (HEIGHT - 2 * MARGIN) / (ymax - ymin)

    def px(x):
        return MARGIN + (x - xmin) * sx

    def py(y):
        return HEIGHT - MARGIN - (y - ymin) * sy

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" data-xmin="{xmin!r}" data-xmax="{xmax!r}" '
        f'data-ymin="{ymin!r}" data-ymax="{ymax!r}" data-margin="{MARGIN}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    for align, x, value in (("start", MARGIN, xmin), ("end", WIDTH - MARGIN, xmax)):
        parts.append(f'<text x="{x}" y="{HEIGHT - MARGIN + 18}" '
                     f'text-anchor="{align}" font-size="11">{value:g}</text>')
    for y, value in ((HEIGHT - MARGIN, ymin), (MARGIN, ymax)):
        parts.append(f'<text x="{MARGIN - 6}" y="{y + 4}" text-anchor="end" '
                     f'font-size="11">{value:g}</text>')
    if title:
        parts.append(f'<text x="{WIDTH // 2}" y="{MARGIN - 24}" '
                     f'text-anchor="middle" font-size="14">{title}</text>')
    for i, (name, ys) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{px(x)!r},{py(y)!r}" for x, y in zip(xs, ys))
        parts.append(f'<polyline data-name="{name}" points="{points}" '
                     f'fill="none" stroke="{color}" stroke-width="1.5"/>')
        if n == 1:
            parts.append(f'<circle cx="{px(xs[0])!r}" cy="{py(ys[0])!r}" '
                         f'r="3" fill="{color}"/>')
        parts.append(f'<text x="{WIDTH - MARGIN + 6}" y="{MARGIN + 16 * i}" '
                     f'font-size="11" fill="{color}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def recover_series(svg_text: str) -> dict:
    """Invert the axis transform of a rendered plot: {name: (xs, ys)}."""
    import re

    root = re.search(r"<svg[^>]*>", svg_text).group(0)

    def attr(name):
        return float(re.search(f'{name}="([^"]+)"', root).group(1))

    xmin, xmax = attr("data-xmin"), attr("data-xmax")
    ymin, ymax = attr("data-ymin"), attr("data-ymax")
    margin = attr("data-margin")
    width, height = attr("width"), attr("height")
    sx = (width - 2 * margin) / (xmax - xmin)
    sy = (height - 2 * margin) / (ymax - ymin)
    out = {}
    for m in re.finditer(r'<polyline data-name="([^"]+)" points="([^"]*)"', svg_text):
        name, points = m.group(1), m.group(2)
        xs, ys = [], []
        for pair in points.split():
            xs_px, ys_px = map(float, pair.split(","))
            xs.append(xmin + (xs_px - margin) / sx)
            ys.append(ymin + (height - margin - ys_px) / sy)
        out[name] = (xs, ys)
    return out
