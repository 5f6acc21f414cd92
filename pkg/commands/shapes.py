import os

import click
import numpy as np

from commands import EXIT_FAILED, EXIT_OK, load_json, run_command
from errors import InvalidInput
from export import write_json, write_levels_svg
from psi_field import GridSpec, ScalarField, levels_from_field
from shape_constructor import boundary_samples, construct, problem_from_dict, psi_of_blocks, result_matrix


def _chain_svg(path, result, domains, threads):
    curves = [boundary_samples(d) for d in domains]
    pts = np.concatenate(curves)
    pad = 0.2 * max(np.ptp(pts.real), np.ptp(pts.imag))
    g = GridSpec(pts.real.min() - pad, pts.real.max() + pad, pts.imag.min() - pad, pts.imag.max() + pad, 81, 81)
    values = psi_of_blocks(result.blocks, g.points().ravel(), threads).reshape(g.ny, g.nx)
    field = ScalarField(g, values)
    write_levels_svg(path, levels_from_field(field, result.eps), g, curves)


@click.command()
@click.option("--problem", "problem_path", default=None, help="Shape problem JSON.")
@click.option("--no-matrices", "no_matrices", is_flag=True, default=None, help="Leave block matrices out of result.json.")
@click.option("--out", "output_dir", default=None)
@click.pass_context
def shapes(ctx, problem_path, no_matrices, output_dir):
    """Build a nilpotent matrix with a prescribed chain of pseudospectra."""
    flags = {
        "inputs": [problem_path] if problem_path else None,
        "output_dir": output_dir,
        "options": {"no_matrices": no_matrices},
    }

    def body(cfg):
        if len(cfg.inputs) != 1:
            raise InvalidInput("give --problem")
        problem = problem_from_dict(load_json(cfg.inputs[0]))
        result = construct(problem, seed=cfg.seed, threads=cfg.threads)
        out = cfg.output_dir
        with_matrices = not cfg.options.get("no_matrices")
        if "json" in cfg.formats:
            write_json(os.path.join(out, "result.json"), result.to_dict(with_matrices=with_matrices))
            write_json(os.path.join(out, "verification.json"), result.verification.to_dict())
            write_json(os.path.join(out, "blocks.json"), [b.to_dict() for b in result.blocks])
            if with_matrices:
                write_json(os.path.join(out, "matrix.json"), result_matrix(result))
        if "svg" in cfg.formats:
            _chain_svg(os.path.join(out, "chain.svg"), result, problem.domains, cfg.threads)
        summary = f"eps={[round(e, 6) for e in result.eps]} Ns={result.Ns}"
        if not result.passed:
            return EXIT_FAILED, f"[verify_inclusions] verification failed; {summary}"
        return EXIT_OK, summary

    run_command(ctx, "shapes", flags, body)
