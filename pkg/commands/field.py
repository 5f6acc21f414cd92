import os

import click

from commands import EXIT_OK, load_json, load_matrix, parse_floats, run_command
from errors import InvalidInput
from export import write_field_csv, write_levels_json, write_levels_svg
from operator_models import model_from_dict, section
from psi_field import GridSpec, compute_field, levels_from_field


@click.command()
@click.option("--matrix", "matrix_path", default=None, help="CMatrix JSON.")
@click.option("--model", "model_path", default=None, help="Operator model JSON; its n-section is used.")
@click.option("--n", "n", type=int, default=None, help="Section size for --model (default 64).")
@click.option("--grid", default=None, help="xmin:xmax:ymin:ymax:nx:ny")
@click.option("--levels", default=None, help="Comma-separated epsilon values.")
@click.option("--out", "output_dir", default=None)
@click.pass_context
def field(ctx, matrix_path, model_path, n, grid, levels, output_dir):
    """Psi on a grid, with optional epsilon-level contours."""
    flags = {
        "inputs": [p for p in (matrix_path, model_path) if p] or None,
        "grid": grid,
        "output_dir": output_dir,
        "options": {"levels": levels, "n": n, "source": "model" if model_path else None},
    }

    def body(cfg):
        opts = cfg.options
        if len(cfg.inputs) != 1:
            raise InvalidInput("give exactly one of --matrix or --model")
        if opts.get("source") == "model":
            A = section(model_from_dict(load_json(cfg.inputs[0])), int(opts.get("n") or 64))
        else:
            A = load_matrix(cfg.inputs[0])
        raw = opts.get("levels")
        if isinstance(raw, list):
            eps_list = [float(v) for v in raw]
        else:
            eps_list = parse_floats(str(raw), "levels") if raw is not None else []
        for e in eps_list:
            if not e > 0:
                raise InvalidInput(f"--levels values must be positive, got {e}")
        g = GridSpec.parse(cfg.grid or "-2:2:-2:2:101:101")

        values = compute_field(A, g, threads=cfg.threads)
        out = cfg.output_dir
        if "csv" in cfg.formats:
            write_field_csv(os.path.join(out, "field.csv"), values)
        level_sets = levels_from_field(values, eps_list)
        if level_sets:
            if "json" in cfg.formats:
                write_levels_json(os.path.join(out, "levels.json"), level_sets)
            if "svg" in cfg.formats:
                write_levels_svg(os.path.join(out, "levels.svg"), level_sets, g)
        curves = sum(len(ls.polylines) for ls in level_sets)
        return EXIT_OK, f"{g.nx}x{g.ny} field, {len(level_sets)} levels, {curves} curves"

    run_command(ctx, "field", flags, body)
