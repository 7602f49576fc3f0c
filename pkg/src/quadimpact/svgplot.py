"""Minimal deterministic SVG line plots.

Every figure uses a fixed 800x600 viewBox, stacks one panel per quantity
group and draws each series as a polyline. Numbers are printed with fixed
precision and nothing time-dependent is embedded, so identical inputs give
byte-identical files.
"""

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 800, 600
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
           "#17becf")
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 130, 10, 30
MAX_POINTS = 2000


def _fmt(x):
    return f"{x:.2f}"


def _label(v):
    return f"{v:.4g}"


def _decimate(x, y):
    if len(x) <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).round().astype(int))
    return x[idx], y[idx]


def _panel(out, top, height, title, x, series, xlabel, show_x):
    left = MARGIN_L
    width = WIDTH - MARGIN_L - MARGIN_R
    ys = [np.asarray(y, dtype=float) for _, y in series]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(0)
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    x = np.asarray(x, dtype=float)
    x0, x1 = float(x.min()), float(x.max())
    if x1 - x0 < 1e-12:
        x1 = x0 + 1.0

    def sx(v):
        return left + (v - x0) / (x1 - x0) * width

    def sy(v):
        return top + height - (v - lo) / (hi - lo) * height

    out.append(f'<rect x="{left}" y="{top}" width="{width}" height="{_fmt(height)}" '
               f'fill="none" stroke="#888" stroke-width="1"/>')
    out.append(f'<text x="{left + 4}" y="{_fmt(top + 14)}" font-size="12">{escape(title)}</text>')
    out.append(f'<text x="{left - 4}" y="{_fmt(top + 10)}" font-size="10" '
               f'text-anchor="end">{_label(hi)}</text>')
    out.append(f'<text x="{left - 4}" y="{_fmt(top + height)}" font-size="10" '
               f'text-anchor="end">{_label(lo)}</text>')
    if lo < 0.0 < hi:
        out.append(f'<line x1="{left}" y1="{_fmt(sy(0.0))}" x2="{left + width}" '
                   f'y2="{_fmt(sy(0.0))}" stroke="#ccc" stroke-width="1"/>')
    if show_x:
        yb = top + height + 14
        out.append(f'<text x="{left}" y="{_fmt(yb)}" font-size="10">{_label(x0)}</text>')
        out.append(f'<text x="{left + width}" y="{_fmt(yb)}" font-size="10" '
                   f'text-anchor="end">{_label(x1)}</text>')
        out.append(f'<text x="{left + width / 2}" y="{_fmt(yb)}" font-size="10" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
    for k, ((name, _), y) in enumerate(zip(series, ys)):
        color = PALETTE[k % len(PALETTE)]
        xd, yd = _decimate(x, y)
        ok = np.isfinite(yd)
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(xd[ok], yd[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{pts}"/>')
        ly = top + 14 + 14 * k
        out.append(f'<line x1="{left + width + 8}" y1="{_fmt(ly - 4)}" x2="{left + width + 24}" '
                   f'y2="{_fmt(ly - 4)}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + width + 28}" y="{_fmt(ly)}" font-size="10">'
                   f'{escape(name)}</text>')


def render(panels, x, xlabel="t [s]"):
    """SVG text for stacked panels sharing one x axis.

    Parameters
    ----------
    panels : list of (str, list of (str, array_like))
        Panel title and its named series.
    x : array_like
        Shared abscissa.
    xlabel : str

    Returns
    -------
    str
    """
    if not panels:
        raise ValueError("at least one panel is required")
    gap = 20
    avail = HEIGHT - MARGIN_T - MARGIN_B - gap * (len(panels) - 1)
    h = avail / len(panels)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
           f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    for i, (title, series) in enumerate(panels):
        top = MARGIN_T + i * (h + gap)
        _panel(out, top, h, title, x, series, xlabel, i == len(panels) - 1)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _had_contact(log):
    force_cols = [c for c in log.columns if c.startswith(("fn", "ff")) and c.endswith("_N")]
    if "contact_flag" in log and np.any(log.col("contact_flag") > 0):
        return True
    return any(np.any(log.col(c) != 0.0) for c in force_cols)


def log_panels(log):
    """Panel list for a trajectory log.

    States (position, velocity, attitude, plus arm lengths for the
    compliant robot) are always drawn. The contact force panel appears only
    if contact occurred.
    """
    def group(title, names, scale=1.0):
        present = [n for n in names if n in log]
        return (title, [(n, log.col(n) * scale) for n in present]) if present else None

    xyz = "xyz"
    panels = [
        group("position [m]", [f"p{a}_m" for a in xyz]),
        group("velocity [m/s]", [f"v{a}_mps" for a in xyz]),
        group("attitude [deg]", ["roll_rad", "pitch_rad", "yaw_rad"], 180.0 / np.pi),
        group("arm length [m]", [f"l{j}_m" for j in range(1, 5)]),
    ]
    if _had_contact(log):
        panels.append(group("contact force [N]", [f"fn{j}_N" for j in range(1, 5)]
                            + [f"ff{j}_N" for j in range(1, 5)]))
    return [p for p in panels if p is not None]


def plot_log(log, path=None):
    """Render a trajectory log; write it to ``path`` if given.

    Returns
    -------
    str
        The SVG text.
    """
    svg = render(log_panels(log), log.t)
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)
    return svg


def plot_sweep(result, path=None):
    """Peak acceleration against approach speed for both robots."""
    panels = [
        ("peak acceleration [m/s^2]", [("rigid", result.a_rigid),
                                       ("compliant", result.a_compliant)]),
        ("rigid - compliant [m/s^2]", [("difference", result.difference)]),
    ]
    svg = render(panels, result.speeds, xlabel="speed [m/s]")
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)
    return svg
