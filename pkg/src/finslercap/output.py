"""CSV and SVG emitters for CLI results.

All files are written atomically (temp file in the target directory,
then rename), numbers are printed with 17 significant digits so reruns
of an identical configuration produce bit-identical output, and the
SVG heatmap is a plain grid of rect cells under a linear color ramp —
no plotting stack involved.
"""

import math
import os
import tempfile

import numpy as np


def format_number(x):
    """Full-precision text for one CSV cell."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def _cell(x):
    if isinstance(x, str):
        return x
    return format_number(x)


def atomic_write(path, text):
    """Write text to path via a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    atomic_write(path, "\n".join(lines) + "\n")


def base_field_csv(path, grid, values):
    """Base-grid scalar field as i,j,x1,x2,value rows."""
    values = np.asarray(values)
    rows = []
    for i in range(grid.nx):
        for j in range(grid.ny):
            rows.append((i, j, grid.x1[i], grid.x2[j], values[i, j]))
    write_csv(path, ("i", "j", "x1", "x2", "value"), rows)


def bundle_field_csv(path, grid, values):
    """Bundle scalar field as i,j,k,x1,x2,theta,value rows."""
    values = np.asarray(values)
    rows = []
    for i in range(grid.nx):
        for j in range(grid.ny):
            for k in range(grid.ntheta):
                rows.append((i, j, k, grid.x1[i], grid.x2[j],
                             grid.thetas[k], values[i, j, k]))
    write_csv(path, ("i", "j", "k", "x1", "x2", "theta", "value"), rows)


def reports_csv(path, reports):
    """CheckReport rows as check,samples,max_rel_err,threshold,pass."""
    write_csv(path, ("check", "samples", "max_rel_err", "threshold", "pass"),
              [r.row() for r in reports])


def summary_csv(path, pairs):
    """Two-column key,value summary."""
    write_csv(path, ("key", "value"), pairs)


# -- SVG heatmap ---------------------------------------------------------------

_RAMP = ((13, 8, 135), (156, 23, 158), (237, 121, 83), (240, 249, 33))


def _color(t):
    k = min(int(t * (len(_RAMP) - 1)), len(_RAMP) - 2)
    f = t * (len(_RAMP) - 1) - k
    a, b = _RAMP[k], _RAMP[k + 1]
    return tuple(round(a[c] + (b[c] - a[c]) * f) for c in range(3))


def svg_heatmap(path, grid, values, title=""):
    """Base-grid field as an SVG grid of filled rect cells.

    Non-finite entries are drawn in gray; the color ramp is linear
    between the finite minimum and maximum.
    """
    values = np.asarray(values, dtype=float)
    finite = values[np.isfinite(values)]
    lo = float(finite.min()) if finite.size else 0.0
    hi = float(finite.max()) if finite.size else 0.0
    span = hi - lo
    size = 640
    cw = size / max(grid.nx, grid.ny)
    width, height = grid.nx * cw, grid.ny * cw
    pad_top = 24 if title else 0
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{width:.0f}" height="{height + pad_top:.0f}" '
        f'viewBox="0 0 {width:.2f} {height + pad_top:.2f}">'
    ]
    if title:
        out.append(f'<text x="4" y="16" font-family="monospace" '
                   f'font-size="13">{title} [{lo:.6g}, {hi:.6g}]</text>')
    for i in range(grid.nx):
        for j in range(grid.ny):
            v = values[i, j]
            if not math.isfinite(v):
                fill = "rgb(128,128,128)"
            else:
                t = (v - lo) / span if span > 0 else 0.5
                r, g, b = _color(min(max(t, 0.0), 1.0))
                fill = f"rgb({r},{g},{b})"
            # x2 increases upward; SVG y runs downward
            x = i * cw
            y = pad_top + (grid.ny - 1 - j) * cw
            out.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw:.2f}" '
                       f'height="{cw:.2f}" fill="{fill}"/>')
    out.append("</svg>")
    atomic_write(path, "\n".join(out) + "\n")
