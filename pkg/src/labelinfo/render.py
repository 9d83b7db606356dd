"""Hand-rolled deterministic SVG rendering: grid heatmaps and line curves.

Every number shown in a plot is recomputable from the pivot CSV emitted
alongside it; the SVG carries no state of its own. Output bytes depend only
on the input rows.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

_CELL_W, _CELL_H = 56, 34
_LO_COLOR = (247, 251, 255)
_HI_COLOR = (8, 48, 107)

_SERIES_COLORS = {
    "sparse": "#7a49a5",
    "topclass": "#d62728",
    "pca": "#1f77b4",
    "soft": "#2ca02c",
    "hard": "#2ca02c",
}


def _cell_color(t: float) -> str:
    r, g, b = (round(lo + (hi - lo) * t) for lo, hi in zip(_LO_COLOR, _HI_COLOR))
    return f"#{r:02x}{g:02x}{b:02x}"


def _text(x, y, s, size=11, anchor="middle", fill="#000000") -> str:
    return (f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" '
            f'font-family="sans-serif" text-anchor="{anchor}" '
            f'fill="{fill}">{escape(str(s))}</text>')


def _is_ok(row) -> bool:
    return str(row.get("status", "ok")) == "ok"


def pivot_rows(rows, metric: str, facet: str):
    """Mean of `metric` per (facet, n, k) over rows with ok status.

    Returns a list of dicts {facet, n, k, value, count} sorted by
    (facet, n, k); rows whose metric is empty or errored are dropped.
    """
    if not rows:
        raise ValueError("no rows to pivot")
    for column in (metric, facet, "n", "k"):
        if column not in rows[0]:
            raise ValueError(f"unknown column {column!r}")
    groups: dict = {}
    for row in rows:
        if not _is_ok(row) or str(row[metric]) == "":
            continue
        key = (str(row[facet]), int(row["n"]), int(row["k"]))
        groups.setdefault(key, []).append(float(row[metric]))
    out = []
    for (fval, n, k) in sorted(groups):
        vals = groups[(fval, n, k)]
        out.append({"facet": fval, "n": n, "k": k,
                    "value": sum(vals) / len(vals), "count": len(vals)})
    return out


def pivot_to_csv(pivot) -> str:
    lines = ["facet,n,k,value,count"]
    lines.extend(f"{p['facet']},{p['n']},{p['k']},{repr(float(p['value']))},{p['count']}"
                 for p in pivot)
    return "\n".join(lines) + "\n"


def render_heatmap(rows, metric: str, facet: str) -> tuple[str, str]:
    """One n-by-k heatmap panel per facet value; returns (svg, pivot_csv).

    Cells show the rep-averaged metric; the color scale is linear and
    shared across panels, with its min/max printed in the footer.
    """
    pivot = pivot_rows(rows, metric, facet)
    if not pivot:
        raise ValueError(f"no usable values for metric {metric!r}")
    facets = sorted({p["facet"] for p in pivot})
    ns = sorted({p["n"] for p in pivot})
    ks = sorted({p["k"] for p in pivot})
    values = {(p["facet"], p["n"], p["k"]): p["value"] for p in pivot}
    vmin = min(p["value"] for p in pivot)
    vmax = max(p["value"] for p in pivot)
    span = vmax - vmin

    left, top = 60, 46
    panel_w = len(ks) * _CELL_W
    panel_h = len(ns) * _CELL_H
    gap = 40
    width = left + len(facets) * (panel_w + gap)
    height = top + panel_h + 58
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             '<rect width="100%" height="100%" fill="#ffffff"/>']
    for pi, fval in enumerate(facets):
        x0 = left + pi * (panel_w + gap)
        parts.append(_text(x0 + panel_w / 2, top - 24, f"{facet} = {fval}", size=13))
        for ci, k in enumerate(ks):
            parts.append(_text(x0 + ci * _CELL_W + _CELL_W / 2, top - 8, k, size=10))
        for ri, n in enumerate(ns):
            if pi == 0:
                parts.append(_text(x0 - 8, top + ri * _CELL_H + _CELL_H / 2 + 4, n,
                                   size=10, anchor="end"))
            for ci, k in enumerate(ks):
                x = x0 + ci * _CELL_W
                y = top + ri * _CELL_H
                v = values.get((fval, n, k))
                if v is None:
                    parts.append(f'<rect x="{x}" y="{y}" width="{_CELL_W}" '
                                 f'height="{_CELL_H}" fill="#dddddd" stroke="#ffffff"/>')
                    continue
                t = 0.5 if span == 0 else (v - vmin) / span
                parts.append(f'<rect x="{x}" y="{y}" width="{_CELL_W}" '
                             f'height="{_CELL_H}" fill="{_cell_color(t)}" stroke="#ffffff"/>')
                text_fill = "#ffffff" if t > 0.6 else "#000000"
                parts.append(_text(x + _CELL_W / 2, y + _CELL_H / 2 + 4,
                                   f"{v:.3f}", size=9, fill=text_fill))
        parts.append(_text(x0 - 34, top + panel_h / 2, "n", size=11)
                     if pi == 0 else "")
        parts.append(_text(x0 + panel_w / 2, top + panel_h + 16, "k", size=11))
    parts.append(_text(left, top + panel_h + 40,
                       f"{metric}: min={vmin:.6g} max={vmax:.6g}, linear scale,"
                       f" cells averaged over reps", size=11, anchor="start"))
    parts.append("</svg>")
    svg = "\n".join(p for p in parts if p) + "\n"
    return svg, pivot_to_csv(pivot)


def _panel_curves(parts, x0, y0, w, h, series, hlines, title, xlabel, ylabel):
    """Draw one axes panel with line series and horizontal reference lines."""
    xs = sorted({x for pts in series.values() for x, _ in pts})
    all_y = [y for pts in series.values() for _, y in pts] + list(hlines.values())
    ymin, ymax = min(all_y), max(all_y)
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    pad = 0.06 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad
    xmin, xmax = min(xs), max(xs)
    xspan = (xmax - xmin) or 1.0

    def px(x):
        return x0 + (x - xmin) / xspan * w

    def py(y):
        return y0 + h - (y - ymin) / (ymax - ymin) * h

    parts.append(f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" '
                 f'fill="none" stroke="#808080"/>')
    parts.append(_text(x0 + w / 2, y0 - 8, title, size=12))
    parts.append(_text(x0 + w / 2, y0 + h + 30, xlabel, size=11))
    parts.append(_text(x0 - 44, y0 + h / 2, ylabel, size=11))
    parts.append(_text(x0 - 6, py(ymin) + 4, f"{ymin:.3g}", size=9, anchor="end"))
    parts.append(_text(x0 - 6, py(ymax) + 4, f"{ymax:.3g}", size=9, anchor="end"))
    for x in xs:
        parts.append(_text(px(x), y0 + h + 14, x, size=9))
    for name, yval in sorted(hlines.items()):
        color = _SERIES_COLORS.get(name, "#555555")
        dash = ' stroke-dasharray="6,4"' if name == "hard" else ""
        parts.append(f'<line x1="{x0}" y1="{py(yval):.2f}" x2="{x0 + w}" '
                     f'y2="{py(yval):.2f}" stroke="{color}" stroke-width="1.5"{dash}/>')
        parts.append(_text(x0 + w - 4, py(yval) - 4, name, size=9, anchor="end",
                           fill=color))
    for name, pts in sorted(series.items()):
        color = _SERIES_COLORS.get(name, "#555555")
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in sorted(pts))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        for x, y in pts:
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" '
                         f'fill="{color}"/>')
        lx, ly = sorted(pts)[-1]
        parts.append(_text(px(lx) + 4, py(ly), name, size=9, anchor="start",
                           fill=color))
    return px, py


def render_curve_panels(panels, xlabel: str, ylabel: str) -> str:
    """Row of line-plot panels.

    `panels` is a list of dicts {title, series: {name: [(x, y), ...]},
    hlines: {name: y}, marker: optional (x, y, label)}.
    """
    if not panels:
        raise ValueError("no panels to render")
    w, h = 240, 190
    left, top, gap = 70, 40, 80
    width = left + len(panels) * (w + gap)
    height = top + h + 60
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             '<rect width="100%" height="100%" fill="#ffffff"/>']
    for i, panel in enumerate(panels):
        x0 = left + i * (w + gap)
        px, py = _panel_curves(parts, x0, top, w, h, panel["series"],
                               panel.get("hlines", {}), panel["title"],
                               xlabel, ylabel)
        marker = panel.get("marker")
        if marker is not None:
            mx, my, label = marker
            parts.append(f'<circle cx="{px(mx):.2f}" cy="{py(my):.2f}" r="5" '
                         f'fill="none" stroke="#000000" stroke-width="1.5"/>')
            parts.append(_text(px(mx), py(my) - 9, label, size=9))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
