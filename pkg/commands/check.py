import os

import click
import numpy as np

from commands import (
    EXIT_FAILED,
    EXIT_OK,
    load_json,
    load_matrix,
    parse_ladder,
    parse_range,
    run_command,
)
from errors import InvalidInput
from export import write_json, write_study_csv
from linalg_core import random_matrix
from operator_models import convergence_study, model_from_dict, section, support_convergence
from psi_field import CHECKS, GridSpec, Lcg, run_checks

DEFAULT_PROPS = "lip1,band,ratio,semiconvex,subharmonic"
STUDIES = ("sections", "support")
# sections of the backward shift close the gap to |z| - 1 at rate n^-2
SECTIONS_TOL = 5e-3


def _names(text, allowed, flag):
    names = [s.strip() for s in text.split(",") if s.strip()]
    unknown = [s for s in names if s not in allowed]
    if unknown:
        raise InvalidInput(f"unknown {flag} {', '.join(unknown)}; choose from {', '.join(allowed)}")
    return names


def _sections_pass(table, tol):
    final = table.rows[-1]["sup_error"]
    return bool(table.qt_standard and table.monotone and final <= tol)


@click.command()
@click.option("--matrix", "matrix_path", default=None)
@click.option("--model", "model_path", default=None)
@click.option("--random", "random_n", type=int, default=None, help="Random non-normal n x n matrix from --seed.")
@click.option("--n", "n", type=int, default=None, help="Section size when checking a model (default 64).")
@click.option("--props", default=None, help=f"Comma-separated from {', '.join(CHECKS)}.")
@click.option("--samples", type=int, default=None, help="Samples per property (default 200).")
@click.option("--study", default=None, help="sections,support")
@click.option("--grid", default=None, help="Grid for the sections study.")
@click.option("--sizes", default=None, help="Section ladder, start:stop[:step].")
@click.option("--annulus", default=None, help="r_min:r_max region of the sections study.")
@click.option("--thetas", type=int, default=None, help="Angles for the support study (default 8).")
@click.option("--tol", type=float, default=None, help="Final sup error accepted by the sections study.")
@click.option("--seed", type=int, default=None)
@click.option("--out", "output_dir", default=None)
@click.pass_context
def check(ctx, matrix_path, model_path, random_n, n, props, samples, study, grid, sizes,
          annulus, thetas, tol, seed, output_dir):
    """Empirical checks of the Psi inequalities and section studies."""
    flags = {
        "inputs": [p for p in (matrix_path, model_path) if p] or None,
        "grid": grid,
        "seed": seed,
        "output_dir": output_dir,
        "options": {
            "source": "model" if model_path else ("random" if random_n is not None else None),
            "random_n": random_n, "n": n, "props": props, "samples": samples,
            "study": study, "sizes": sizes, "annulus": annulus, "thetas": thetas, "tol": tol,
        },
    }

    def body(cfg):
        opts = cfg.options
        source = opts.get("source")
        model = None
        if source == "random":
            A = random_matrix(int(opts["random_n"]), np.random.default_rng(cfg.seed))
        elif len(cfg.inputs) != 1:
            raise InvalidInput("give exactly one of --matrix, --model or --random")
        elif source == "model":
            model = model_from_dict(load_json(cfg.inputs[0]))
            A = section(model, int(opts.get("n") or 64))
        else:
            A = load_matrix(cfg.inputs[0])

        studies = _names(opts["study"], STUDIES, "study") if opts.get("study") else []
        default_props = "" if studies else DEFAULT_PROPS
        prop_names = _names(opts.get("props") or default_props, CHECKS, "property")
        if studies and model is None:
            raise InvalidInput("studies need --model")

        out = cfg.output_dir
        reports = run_checks(A, prop_names, Lcg(cfg.seed), int(opts.get("samples") or 200))
        ok = all(r.passed for r in reports)
        tables = []
        sizes = parse_ladder(opts.get("sizes") or "16:256")
        if "sections" in studies:
            g = GridSpec.parse(cfg.grid or "-2:2:-2:2:41:41")
            if opts.get("annulus"):
                region = parse_range(opts["annulus"], "annulus")
            else:
                # non-quasitriangular models are studied on the whole grid
                region = (1.05, 2.0) if model.qt_standard else None
            table = convergence_study(model, g, sizes, annulus=region, threads=cfg.threads)
            passed = _sections_pass(table, float(opts.get("tol") or SECTIONS_TOL))
            ok = ok and passed
            if "csv" in cfg.formats:
                write_study_csv(os.path.join(out, "sections.csv"), table)
            tables.append(dict(table.to_dict(), **{"pass": passed}))
        if "support" in studies:
            count = int(opts.get("thetas") or 8)
            angles = [2 * np.pi * k / count for k in range(count)]
            table = support_convergence(model, angles, sizes)
            ok = ok and table.monotone
            if "csv" in cfg.formats:
                write_study_csv(os.path.join(out, "support.csv"), table)
            tables.append(dict(table.to_dict(), **{"pass": table.monotone}))

        write_json(os.path.join(out, "report.json"), {
            "pass": ok,
            "reports": [r.to_dict() for r in reports],
            "studies": tables,
        })
        failed = [r.name for r in reports if not r.passed] + [t["kind"] for t in tables if not t["pass"]]
        summary = "all checks passed" if ok else f"failed: {', '.join(failed)}"
        return (EXIT_OK if ok else EXIT_FAILED), summary

    run_command(ctx, "check", flags, body)
