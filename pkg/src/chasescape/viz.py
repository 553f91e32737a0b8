"""Static SVG artifacts: phase-diagram heatmaps and state-frame snapshots.

Hand-rolled SVG keeps the output deterministic and dependency-free; these
are visual aids, not measurement outputs.
"""

from __future__ import annotations

import numpy as np

# blue (no global survival) -> red (certain global survival)
_STOPS = [(0.231, 0.298, 0.753), (0.865, 0.865, 0.865), (0.706, 0.016, 0.150)]


def _color(value: float) -> str:
    value = min(1.0, max(0.0, value))
    if value < 0.5:
        a, b = _STOPS[0], _STOPS[1]
        t = value / 0.5
    else:
        a, b = _STOPS[1], _STOPS[2]
        t = (value - 0.5) / 0.5
    rgb = [int(round(255 * ((1 - t) * a[i] + t * b[i]))) for i in range(3)]
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def render_phase_heatmap(lambda_grid, mu_w_grid, frac_global: np.ndarray,
                         rho_threshold: float | None = None,
                         cell_px: int = 42) -> str:
    """Heatmap of global-survival fraction over the (lambda_i, mu_w) grid.

    x axis: infection rate; y axis: knight intensity (increasing upward).
    When given, the tree-comparison threshold is drawn as a vertical line:
    left of it, global survival is impossible in the infinite system.
    """
    lams = [float(x) for x in lambda_grid]
    muws = [float(x) for x in mu_w_grid]
    ncol, nrow = len(lams), len(muws)
    mleft, mbottom, mtop, mright = 64, 46, 18, 18
    width = mleft + ncol * cell_px + mright
    height = mtop + nrow * cell_px + mbottom
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for i in range(nrow):          # row 0 = smallest mu_w, drawn at the bottom
        for j in range(ncol):
            x = mleft + j * cell_px
            y = mtop + (nrow - 1 - i) * cell_px
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell_px}" height="{cell_px}" '
                f'fill="{_color(float(frac_global[i, j]))}"/>')
    for j, lam in enumerate(lams):
        x = mleft + j * cell_px + cell_px // 2
        parts.append(
            f'<text x="{x}" y="{mtop + nrow * cell_px + 16}" font-size="10" '
            f'text-anchor="middle">{lam:g}</text>')
    for i, mw in enumerate(muws):
        y = mtop + (nrow - 1 - i) * cell_px + cell_px // 2 + 3
        parts.append(
            f'<text x="{mleft - 6}" y="{y}" font-size="10" '
            f'text-anchor="end">{mw:g}</text>')
    parts.append(
        f'<text x="{mleft + ncol * cell_px // 2}" y="{height - 12}" font-size="12" '
        f'text-anchor="middle">infection rate</text>')
    parts.append(
        f'<text x="14" y="{mtop + nrow * cell_px // 2}" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 14 {mtop + nrow * cell_px // 2})">'
        f'knight intensity</text>')
    if rho_threshold is not None and lams:
        # linear position between neighboring grid values (cell centers)
        centers = [mleft + j * cell_px + cell_px / 2 for j in range(ncol)]
        xpos = None
        if lams[0] <= rho_threshold <= lams[-1] and ncol > 1:
            xpos = float(np.interp(rho_threshold, lams, centers))
        elif rho_threshold < lams[0]:
            xpos = mleft
        if xpos is not None:
            y0, y1 = mtop, mtop + nrow * cell_px
            parts.append(
                f'<line x1="{xpos:.1f}" y1="{y0}" x2="{xpos:.1f}" y2="{y1}" '
                f'stroke="black" stroke-dasharray="5,3" stroke-width="1.5"/>')
            parts.append(
                f'<text x="{xpos:.1f}" y="{mtop - 5}" font-size="10" '
                f'text-anchor="middle">threshold</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


_STATE_FILL = {0: "#3465c8", 1: "#d22c2c", 2: "#2c9e3f"}  # S blue, I red, W green


def render_state_frame(graph, states, max_displacement: float | None = None,
                       size_px: int = 520) -> str:
    """Snapshot of a configuration: gray edges, nodes colored by state,
    and optionally the black circle of maximal infection displacement."""
    config = graph.config
    side = config.box.side
    scale = (size_px - 20) / side
    pos = config.positions

    def xy(i):
        x = 10 + (pos[i, 0] + side / 2) * scale
        y = 10 + (side / 2 - pos[i, 1]) * scale if config.box.dim > 1 else size_px / 2
        return x, y

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size_px}" height="{size_px}" '
        f'viewBox="0 0 {size_px} {size_px}">',
        f'<rect width="{size_px}" height="{size_px}" fill="white"/>',
    ]
    for v in range(graph.n_nodes):
        x1, y1 = xy(v)
        for u in graph.neighbors(v):
            if u > v:
                x2, y2 = xy(int(u))
                parts.append(f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" '
                             f'y2="{y2:.1f}" stroke="#cccccc" stroke-width="0.6"/>')
    if max_displacement is not None and max_displacement > 0:
        ox, oy = xy(config.origin_index)
        parts.append(f'<circle cx="{ox:.1f}" cy="{oy:.1f}" r="{max_displacement * scale:.1f}" '
                     f'fill="none" stroke="black" stroke-width="1.2"/>')
    for v in range(graph.n_nodes):
        x, y = xy(v)
        parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3" '
                     f'fill="{_STATE_FILL[int(states[v])]}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
