"""Density-overlay plots: a minimal self-contained SVG and a matplotlib figure.

The SVG draws histogram bars and the density polyline inside one group
whose transform maps data units to the canvas, so the ``points`` attribute of
the polyline holds the exact ``(x, density)`` pairs that were evaluated.
"""

from xml.sax.saxutils import escape

import numpy as np

__all__ = ["histogram", "svg_density_plot", "density_figure"]

WIDTH = 640
HEIGHT = 400
MARGIN = (40, 20, 30, 60)  # top, right, bottom, left


def histogram(values, weights=None, bins="sturges"):
    """Density-scaled histogram (Sturges bins by default)."""
    values = np.asarray(values, dtype=float)
    edges = np.histogram_bin_edges(values, bins=bins)
    heights, edges = np.histogram(values, bins=edges, weights=weights, density=True)
    return heights, edges


def _num(v):
    return repr(float(v))


def svg_density_plot(values, grid, density, weights=None, title="", components=()):
    """Return SVG text with a histogram of ``values`` and the density polyline.

    Parameters
    ----------
    values, weights : array_like
        Data (and optional weights) for the histogram.
    grid, density : array_like
        Abscissae and the model density evaluated there.
    components : sequence of (label, array)
        Optional extra curves on the same grid, drawn dashed.
    """
    grid = np.asarray(grid, dtype=float)
    density = np.asarray(density, dtype=float)
    heights, edges = histogram(values, weights)
    x_max = float(max(grid[-1], edges[-1]))
    y_top = max(float(np.max(heights)), float(np.max(density)))
    for _, curve in components:
        y_top = max(y_top, float(np.max(curve)))
    y_max = 1.05 * y_top if y_top > 0 else 1.0
    top, right, bottom, left = MARGIN
    pw = WIDTH - left - right
    ph = HEIGHT - top - bottom
    sx = pw / x_max
    sy = ph / y_max

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        out.append(
            f'<text x="{WIDTH / 2}" y="{top / 2 + 5}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{escape(title)}</text>'
        )
    out.append(
        f'<g id="data" transform="translate({left} {top + ph}) scale({_num(sx)} {_num(-sy)})">'
    )
    for h, a, b in zip(heights, edges[:-1], edges[1:]):
        out.append(
            f'<rect class="bar" x="{_num(a)}" y="0" width="{_num(b - a)}" height="{_num(h)}" '
            'fill="#d9d9d9" stroke="#808080" stroke-width="1" vector-effect="non-scaling-stroke"/>'
        )
    for label, curve in components:
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in zip(grid, curve))
        out.append(
            f'<polyline class="component" data-label="{escape(str(label))}" points="{pts}" '
            'fill="none" stroke="#555555" stroke-width="1" stroke-dasharray="3 3" '
            'vector-effect="non-scaling-stroke"/>'
        )
    pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in zip(grid, density))
    out.append(
        f'<polyline id="density" points="{pts}" fill="none" stroke="black" '
        'stroke-width="1.5" vector-effect="non-scaling-stroke"/>'
    )
    out.append("</g>")
    # axes
    x0, y0 = left, top + ph
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + pw}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{top}" stroke="black"/>')
    for t in np.linspace(0.0, x_max, 5):
        px = x0 + t * sx
        out.append(
            f'<text x="{px:.2f}" y="{y0 + 18}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{t:.3g}</text>'
        )
    for t in np.linspace(0.0, y_max, 5):
        py = y0 - t * sy
        out.append(
            f'<text x="{x0 - 6}" y="{py + 4:.2f}" text-anchor="end" font-family="sans-serif" '
            f'font-size="11">{t:.3g}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def density_figure(path, values, grid, density, weights=None, title="", components=(), labels=None):
    """Render the overlay with matplotlib and save it; format follows the extension.

    ``components`` are ``(label, curve)`` pairs drawn in broken lines; ``labels``
    (one group index per observation) colour a rug of ticks along the x-axis.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    values = np.asarray(values, dtype=float)
    heights, edges = histogram(values, weights)
    fig, ax = plt.subplots(figsize=(7.0, 4.3))
    ax.bar(edges[:-1], heights, width=np.diff(edges), align="edge", color="0.88", edgecolor="0.5", linewidth=0.6)
    styles = [":", "--", "-.", (0, (1, 3))]
    for i, (label, curve) in enumerate(components):
        ax.plot(grid, curve, linestyle=styles[i % len(styles)], color="0.3", linewidth=1.2, label=str(label))
    ax.plot(grid, density, color="black", linewidth=1.5, label="fitted density")
    if labels is not None:
        groups = np.unique(labels)
        shades = np.linspace(0.0, 0.6, max(len(groups), 1))
        for g, shade in zip(groups, shades):
            ax.plot(values[labels == g], np.zeros(np.sum(labels == g)), "|", color=str(shade), markersize=10)
    ax.set_xlim(0.0, float(max(grid[-1], edges[-1])))
    ax.set_ylim(bottom=0.0)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    if components:
        ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
