import csv
import io
import json
import os

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def _num(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return repr(float(v))


def csv_text(header, rows):
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return output.getvalue()


def write_text(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return path


def write_json(path, obj):
    return write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_field_csv(path, field):
    g = field.grid
    xs, ys = g.xs, g.ys
    rows = (
        [_num(xs[j]), _num(ys[i]), _num(field.values[i, j])]
        for i in range(g.ny)
        for j in range(g.nx)
    )
    return write_text(path, csv_text(["x", "y", "psi"], rows))


def write_levels_json(path, levels):
    return write_json(path, [level.to_dict() for level in levels])


def _svg_points(line, grid, width, height):
    sx = width / (grid.x_max - grid.x_min)
    sy = height / (grid.y_max - grid.y_min)
    return " ".join(
        f"{(p.real - grid.x_min) * sx:.3f},{(grid.y_max - p.imag) * sy:.3f}" for p in line
    )


def levels_svg(levels, grid, curves=(), width=600):
    """Polylines of each level in its own stroke colour; `curves` are drawn dashed in grey."""
    height = int(round(width * (grid.y_max - grid.y_min) / (grid.x_max - grid.x_min)))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for curve in curves:
        pts = _svg_points(np.append(curve, curve[:1]), grid, width, height)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#888" stroke-dasharray="4 3"/>')
    for k, level in enumerate(levels):
        colour = PALETTE[k % len(PALETTE)]
        parts.append(f'<g stroke="{colour}" fill="none"><title>eps={level.epsilon:g}</title>')
        for line in level.polylines:
            parts.append(f'<polyline points="{_svg_points(line, grid, width, height)}"/>')
        parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_levels_svg(path, levels, grid, curves=()):
    return write_text(path, levels_svg(levels, grid, curves))


def write_study_csv(path, table):
    if table.kind == "sections":
        rows = ([r["n"], _num(r["sup_error"])] for r in table.rows)
        return write_text(path, csv_text(["n", "sup_error"], rows))
    rows = ([_num(r["theta"]), r["n"], _num(r["rho"])] for r in table.rows)
    return write_text(path, csv_text(["theta", "n", "rho"], rows))


def write_scan_csv(path, result):
    rows = []
    for r in result.per_N:
        rows.append([
            r["N"],
            "saturated" if r["saturated"] else _num(r["min_norm"]),
            _num(r["argmin_tau"][0]),
            _num(r["argmin_tau"][1]),
            "1" if result.N_star == r["N"] else "0",
        ])
    return write_text(path, csv_text(["N", "min_norm", "argmin_tau_re", "argmin_tau_im", "N_star_flag"], rows))


def write_norm_table_csv(path, rows):
    return write_text(path, csv_text(["N", "norm"], ([r["N"], _num(r["norm"])] for r in rows)))
