"""Self-contained SVG heat maps for confidence slices.

Hand-rolled output (no plotting dependency) so artifacts are small,
diffable, and byte-identical across reruns. Collision probability is
drawn as a blue-white-red map with the p = 0.5 contour and the labeled
samples overlaid (filled marker = collision, open = no collision).
"""

from __future__ import annotations

import numpy as np

from .boundary import ConfidenceSlice
from .ioutil import atomic_write_text

# plot geometry (pixels)
PLOT_W = 480
PLOT_H = 480
MARGIN_L = 64
MARGIN_R = 96
MARGIN_T = 40
MARGIN_B = 56

_BLUE = (33, 102, 172)
_WHITE = (247, 247, 247)
_RED = (178, 24, 43)


def _color(p: float) -> str:
    if p <= 0.5:
        lo, hi, t = _BLUE, _WHITE, p / 0.5
    else:
        lo, hi, t = _WHITE, _RED, (p - 0.5) / 0.5
    r, g, b = (round(l + (h - l) * t) for l, h in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


def marching_squares(field: np.ndarray, level: float) -> list[tuple]:
    """Level-set segments of a 2-D field, endpoints in fractional index
    coordinates (axis-0 index, axis-1 index). Saddle cells are resolved
    by the cell-center average."""
    s = field - level
    s = np.where(s == 0.0, 1e-30, s)
    nx, ny = s.shape
    segments = []
    for x in range(nx - 1):
        for y in range(ny - 1):
            a = s[x, y]
            b = s[x + 1, y]
            c = s[x + 1, y + 1]
            d = s[x, y + 1]
            pts = {}
            if a * b < 0.0:
                pts["ab"] = (x + a / (a - b), float(y))
            if b * c < 0.0:
                pts["bc"] = (float(x + 1), y + b / (b - c))
            if c * d < 0.0:
                pts["cd"] = (x + 1 - c / (c - d), float(y + 1))
            if d * a < 0.0:
                pts["da"] = (float(x), y + 1 - d / (d - a))
            if len(pts) == 2:
                (p1, p2) = pts.values()
                segments.append((p1, p2))
            elif len(pts) == 4:
                center = 0.25 * (a + b + c + d)
                if (center > 0.0) == (a > 0.0):
                    segments.append((pts["ab"], pts["bc"]))
                    segments.append((pts["cd"], pts["da"]))
                else:
                    segments.append((pts["da"], pts["ab"]))
                    segments.append((pts["bc"], pts["cd"]))
    return segments


def slice_svg(sl: ConfidenceSlice, title: str = "") -> str:
    """Render one confidence slice as an SVG document string."""
    ax_x, ax_y = sl.axes[0], sl.axes[1]
    nx, ny = len(ax_x), len(ax_y)
    x_name = sl.box.dims[sl.plane_dims[0]].name
    x_unit = sl.box.dims[sl.plane_dims[0]].unit
    y_name = sl.box.dims[sl.plane_dims[1]].name
    y_unit = sl.box.dims[sl.plane_dims[1]].unit
    width = MARGIN_L + PLOT_W + MARGIN_R
    height = MARGIN_T + PLOT_H + MARGIN_B

    def px(v):  # data x -> pixel
        return MARGIN_L + PLOT_W * (v - ax_x[0]) / (ax_x[-1] - ax_x[0])

    def py(v):  # data y -> pixel (y grows upward)
        return MARGIN_T + PLOT_H * (1.0 - (v - ax_y[0]) / (ax_y[-1] - ax_y[0]))

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if not title:
        fixed = sl.box.dims[sl.fixed_dim]
        title = f"{fixed.name} = {sl.fixed_value:g} {fixed.unit}".strip()
    out.append(
        f'<text x="{MARGIN_L + PLOT_W / 2:.1f}" y="24" font-size="15" '
        f'text-anchor="middle" font-family="sans-serif">{title}</text>'
    )

    # heat cells: one rect per grid node, covering half a step on each side
    cw = PLOT_W / (nx - 1)
    ch = PLOT_H / (ny - 1)
    for i in range(nx):
        x0 = MARGIN_L + max(i - 0.5, 0.0) * cw
        x1 = MARGIN_L + min(i + 0.5, nx - 1.0) * cw
        for j in range(ny):
            y1 = MARGIN_T + PLOT_H - max(j - 0.5, 0.0) * ch
            y0 = MARGIN_T + PLOT_H - min(j + 0.5, ny - 1.0) * ch
            out.append(
                f'<rect x="{x0:.2f}" y="{y0:.2f}" width="{x1 - x0:.2f}" '
                f'height="{y1 - y0:.2f}" fill="{_color(float(sl.probs[i, j]))}"/>'
            )

    # p = 0.5 contour
    for (x0, y0), (x1, y1) in marching_squares(sl.probs, 0.5):
        out.append(
            f'<line x1="{MARGIN_L + x0 * cw:.2f}" y1="{MARGIN_T + PLOT_H - y0 * ch:.2f}" '
            f'x2="{MARGIN_L + x1 * cw:.2f}" y2="{MARGIN_T + PLOT_H - y1 * ch:.2f}" '
            f'stroke="black" stroke-width="1.6"/>'
        )

    # overlaid samples
    for pt, hit in zip(sl.overlay_points, sl.overlay_collision):
        cx = px(pt[sl.plane_dims[0]])
        cy = py(pt[sl.plane_dims[1]])
        fill = "black" if hit else "white"
        out.append(
            f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3.5" fill="{fill}" '
            f'stroke="black" stroke-width="1"/>'
        )

    # frame and axis labels
    out.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{PLOT_W}" height="{PLOT_H}" '
        f'fill="none" stroke="black" stroke-width="1"/>'
    )
    for frac in (0.0, 0.5, 1.0):
        xv = ax_x[0] + frac * (ax_x[-1] - ax_x[0])
        yv = ax_y[0] + frac * (ax_y[-1] - ax_y[0])
        out.append(
            f'<text x="{px(xv):.1f}" y="{MARGIN_T + PLOT_H + 18}" font-size="12" '
            f'text-anchor="middle" font-family="sans-serif">{xv:.1f}</text>'
        )
        out.append(
            f'<text x="{MARGIN_L - 8}" y="{py(yv) + 4:.1f}" font-size="12" '
            f'text-anchor="end" font-family="sans-serif">{yv:.1f}</text>'
        )
    out.append(
        f'<text x="{MARGIN_L + PLOT_W / 2:.1f}" y="{height - 16}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif">{x_name} [{x_unit}]</text>'
    )
    out.append(
        f'<text x="16" y="{MARGIN_T + PLOT_H / 2:.1f}" font-size="13" '
        f'text-anchor="middle" font-family="sans-serif" '
        f'transform="rotate(-90 16 {MARGIN_T + PLOT_H / 2:.1f})">{y_name} [{y_unit}]</text>'
    )

    # colorbar
    bar_x = MARGIN_L + PLOT_W + 24
    bar_w = 16
    n_stops = 24
    for k in range(n_stops):
        p = (k + 0.5) / n_stops
        y0 = MARGIN_T + PLOT_H * (1.0 - (k + 1) / n_stops)
        out.append(
            f'<rect x="{bar_x}" y="{y0:.2f}" width="{bar_w}" '
            f'height="{PLOT_H / n_stops:.2f}" fill="{_color(p)}"/>'
        )
    out.append(
        f'<rect x="{bar_x}" y="{MARGIN_T}" width="{bar_w}" height="{PLOT_H}" '
        f'fill="none" stroke="black" stroke-width="0.8"/>'
    )
    for frac, label in ((0.0, "0"), (0.5, "0.5"), (1.0, "1")):
        yv = MARGIN_T + PLOT_H * (1.0 - frac)
        out.append(
            f'<text x="{bar_x + bar_w + 6}" y="{yv + 4:.1f}" font-size="11" '
            f'font-family="sans-serif">{label}</text>'
        )
    out.append(
        f'<text x="{bar_x + bar_w / 2:.1f}" y="{MARGIN_T - 8}" font-size="11" '
        f'text-anchor="middle" font-family="sans-serif">p</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_slice_svg(path, sl: ConfidenceSlice, title: str = "") -> None:
    atomic_write_text(path, slice_svg(sl, title))
