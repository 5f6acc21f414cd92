import os

import click

from commands import EXIT_FAILED, EXIT_OK, parse_ladder, run_command
from errors import InvalidInput
from export import write_json, write_norm_table_csv, write_scan_csv
from matfun import NAMED_SERIES, multiplier_growth, oscillation_scan


@click.group(invoke_without_command=True)
@click.option("--r", "r", type=float, default=None, help="Radius of the tau-circle around 1, in (0, 1/2).")
@click.option("--M", "threshold", type=float, default=None, help="Norm threshold defining N_star.")
@click.option("--ladder", default=None, help="start:stop[:step]")
@click.option("--out", "output_dir", default=None)
@click.pass_context
def oscillate(ctx, r, threshold, ladder, output_dir):
    """Growth of ||sqrt(tau - S_N)|| on a circle around tau = 1."""
    if ctx.invoked_subcommand is not None:
        ctx.obj["oscillate_out"] = output_dir
        return
    flags = {
        "output_dir": output_dir,
        "options": {"r": r, "M": threshold, "ladder": ladder},
    }

    def body(cfg):
        opts = cfg.options
        if opts.get("r") is None:
            raise InvalidInput("--r is required")
        result = oscillation_scan(
            float(opts["r"]),
            float(opts.get("M") or 1e6),
            parse_ladder(opts.get("ladder") or "40:120:20"),
            threads=cfg.threads,
        )
        out = cfg.output_dir
        if "csv" in cfg.formats:
            write_scan_csv(os.path.join(out, "scan.csv"), result)
            write_norm_table_csv(os.path.join(out, "contrast.csv"), result.contrast)
        if "json" in cfg.formats:
            write_json(os.path.join(out, "scan.json"), result.to_dict())
        return EXIT_OK, f"r={result.r} N_star={result.N_star}"

    run_command(ctx, "oscillate", flags, body)


@oscillate.command()
@click.option("--series", "series_name", default=None, help=f"One of {', '.join(NAMED_SERIES)}.")
@click.option("--ladder", default=None, help="start:stop[:step]")
@click.option("--out", "output_dir", default=None)
@click.pass_context
def multiplier(ctx, series_name, ladder, output_dir):
    """||f(J_N)|| along a ladder of N for a named series f."""
    flags = {
        "output_dir": output_dir or ctx.obj.get("oscillate_out"),
        "options": {"series": series_name, "ladder": ladder},
    }

    def body(cfg):
        opts = cfg.options
        name = opts.get("series") or "sqrt1mz"
        if name not in NAMED_SERIES:
            raise InvalidInput(f"unknown series {name!r}; choose from {', '.join(NAMED_SERIES)}")
        sizes = parse_ladder(opts.get("ladder") or "64:512")
        table = multiplier_growth(NAMED_SERIES[name](max(sizes)), sizes)
        out = cfg.output_dir
        if "csv" in cfg.formats:
            write_norm_table_csv(os.path.join(out, "multiplier.csv"), table["rows"])
        if "json" in cfg.formats:
            write_json(os.path.join(out, "multiplier.json"), dict(table, series=name))
        last = table["rows"][-1]
        summary = f"{name}: ||f(J_{last['N']})|| = {last['norm']:.6g}"
        return (EXIT_OK if table["monotone"] else EXIT_FAILED), summary

    run_command(ctx, "multiplier", flags, body)
