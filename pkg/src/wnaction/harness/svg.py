"""Self-contained SVG plots that carry their own data tables.

Each plot embeds the plotted numbers as CSV inside ``<metadata>`` and as a
visible table under the axes, so the file is the figure and its data.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

__all__ = ["scatter_plot", "table_svg", "scaling_svg", "bands_svg", "count_svg"]

_W, _H = 560, 360
_PAD = 56
_ROW = 16


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _csv(header, rows) -> str:
    lines = [",".join(header)] + [",".join(repr(v) if isinstance(v, float) else str(v) for v in r) for r in rows]
    return "\n".join(lines)


def _table(header, rows, y0: float) -> list[str]:
    out = []
    col = (_W - 2 * _PAD) / max(len(header), 1)
    for r, cells in enumerate([header] + [[_fmt(v) for v in row] for row in rows]):
        weight = ' font-weight="bold"' if r == 0 else ""
        for c, cell in enumerate(cells):
            out.append(
                f'<text x="{_PAD + c * col:.1f}" y="{y0 + r * _ROW:.1f}" font-size="11"{weight}>{escape(str(cell))}</text>'
            )
    return out


def _document(title, body, header, rows, height) -> str:
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{height:.0f}" '
        f'viewBox="0 0 {_W} {height:.0f}" font-family="monospace">',
        f"<title>{escape(title)}</title>",
        f'<metadata id="data"><![CDATA[\n{_csv(header, rows)}\n]]></metadata>',
        f'<rect width="{_W}" height="{height:.0f}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
        *body,
        "</svg>",
        "",
    ])


def table_svg(title: str, header, rows) -> str:
    rows = [list(r) for r in rows]
    height = 40 + _ROW * (len(rows) + 2)
    return _document(title, _table(header, rows, 44), header, rows, height)


def _span(vals):
    lo, hi = min(vals), max(vals)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.08 * (hi - lo)
    return lo - pad, hi + pad


def scatter_plot(title, xlabel, ylabel, points, line=None, header=None, rows=None) -> str:
    """Points ``(x, y, err)`` with error bars and an optional line ``(slope, intercept)``."""
    points = [(float(x), float(y), float(e)) for x, y, e in points]
    xs = [p[0] for p in points] or [0.0]
    ys = [v for x, y, e in points for v in (y - e, y + e)] or [0.0]
    if line is not None:
        ys += [line[0] * x + line[1] for x in (min(xs), max(xs))]
    x0, x1 = _span(xs)
    y0, y1 = _span(ys)
    top, bottom = 36, _H - _PAD

    def px(x):
        return _PAD + (x - x0) / (x1 - x0) * (_W - 2 * _PAD)

    def py(y):
        return bottom - (y - y0) / (y1 - y0) * (bottom - top)

    body = [
        f'<line x1="{_PAD}" y1="{bottom}" x2="{_W - _PAD}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{top}" x2="{_PAD}" y2="{bottom}" stroke="black"/>',
        f'<text x="{_W / 2:.1f}" y="{bottom + 32}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="14" y="{(top + bottom) / 2:.1f}" font-size="12" transform="rotate(-90 14 {(top + bottom) / 2:.1f})" '
        f'text-anchor="middle">{escape(ylabel)}</text>',
    ]
    for v, anchor in ((x0, "start"), (x1, "end")):
        body.append(f'<text x="{px(v):.1f}" y="{bottom + 14}" font-size="10" text-anchor="{anchor}">{v:.3g}</text>')
    for v in (y0, y1):
        body.append(f'<text x="{_PAD - 4}" y="{py(v):.1f}" font-size="10" text-anchor="end">{v:.3g}</text>')
    if line is not None:
        a, b = line
        body.append(
            f'<line x1="{px(x0):.1f}" y1="{py(a * x0 + b):.1f}" x2="{px(x1):.1f}" y2="{py(a * x1 + b):.1f}" '
            'stroke="steelblue" stroke-dasharray="4 3"/>'
        )
    for x, y, e in points:
        if e > 0:
            body.append(f'<line x1="{px(x):.1f}" y1="{py(y - e):.1f}" x2="{px(x):.1f}" y2="{py(y + e):.1f}" stroke="gray"/>')
        body.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="firebrick"/>')
    header = header or ["x", "y", "err"]
    rows = rows if rows is not None else [list(p) for p in points]
    body += _table(header, rows, _H + 8)
    return _document(title, body, header, rows, _H + 16 + _ROW * (len(rows) + 1))


def scaling_svg(summary: dict) -> str:
    """Mean ``A_L`` against ``ln L`` with the fitted line."""
    pts = summary["points"]
    rows = [[int(round(math.exp(x))), x, y, e, r] for (x, y, e), r in zip(pts, summary["residuals"])]
    return scatter_plot(
        f"mean A_L vs ln L (a_star={summary['a_star']:.4g} +- {summary['a_star_se']:.2g})",
        "ln L", "mean A_L", pts, line=(summary["a_star"], summary["intercept"]),
        header=["L", "ln_L", "mean", "se", "residual"], rows=rows,
    )


def bands_svg(summary: dict) -> str:
    """Mean increments between every pair of chain scales against ``ln(l/l')``."""
    pairs = summary["pairs"]
    pts = [(p["log_ratio"], p["mean"], p["se"]) for p in pairs]
    rows = [[p["l_fine"], p["l_coarse"], p["log_ratio"], p["mean"], p["se"]] for p in pairs]
    slope = summary.get("slope", 0.0)
    return scatter_plot(
        f"band increments at L={summary['L']} (slope={slope:.4g})",
        "ln(l/l')", "mean increment", pts, line=(slope, 0.0),
        header=["l_fine", "l_coarse", "ln_ratio", "mean", "se"], rows=rows,
    )


def count_svg(rows: list[dict]) -> str:
    header = ["L", "l", "nu", "count", "ratio"]
    return table_svg("net ball counts: ln(count) / ((L/l) ln nu)", header, [[r[k] for k in header] for r in rows])
