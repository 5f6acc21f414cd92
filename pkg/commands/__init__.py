"""Shared plumbing for the pslab commands: config merging, input loading, exit codes."""
import json
import logging
import os

import click
from pydantic import ValidationError

from database import record_run
from errors import InvalidInput, PslabError
from export import write_json
from schemas import MatrixIn, RunConfig

log = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3


def load_json(path):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise InvalidInput(f"{path}: no such file")
    except json.JSONDecodeError as e:
        raise InvalidInput(f"{path}: malformed JSON ({e})")


def load_matrix(path):
    try:
        return MatrixIn.model_validate(load_json(path)).to_array()
    except ValidationError as e:
        raise InvalidInput(f"{path}: invalid matrix: {e}")


def parse_floats(text, name):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidInput(f"--{name} must be comma-separated numbers, got {text!r}")
    if not values:
        raise InvalidInput(f"--{name} is empty")
    return values


def parse_ladder(text):
    """`start:stop:step` is arithmetic, `start:stop` doubles."""
    try:
        parts = [int(p) for p in text.split(":")]
    except ValueError:
        raise InvalidInput(f"ladder must be start:stop[:step] integers, got {text!r}")
    if len(parts) not in (2, 3) or parts[0] < 1 or parts[1] < parts[0]:
        raise InvalidInput(f"bad ladder {text!r}")
    if len(parts) == 3:
        if parts[2] < 1:
            raise InvalidInput(f"ladder step must be positive in {text!r}")
        return list(range(parts[0], parts[1] + 1, parts[2]))
    ladder, n = [], parts[0]
    while n <= parts[1]:
        ladder.append(n)
        n *= 2
    return ladder


def parse_range(text, name):
    values = [v for v in text.split(":")]
    if len(values) != 2:
        raise InvalidInput(f"--{name} must be lo:hi, got {text!r}")
    try:
        lo, hi = float(values[0]), float(values[1])
    except ValueError:
        raise InvalidInput(f"--{name} must be lo:hi numbers, got {text!r}")
    if not lo < hi:
        raise InvalidInput(f"--{name} needs lo < hi")
    return lo, hi


def effective_config(ctx, command, flags):
    """flags > config file > environment > defaults."""
    env = ctx.obj["env"]
    merged = {
        "command": command,
        "output_dir": env["output_dir"],
        "seed": env["seed"],
        "threads": env["threads"],
        "options": {},
    }
    path = ctx.obj.get("config_path")
    if path:
        file_cfg = load_json(path)
        if not isinstance(file_cfg, dict):
            raise InvalidInput(f"{path}: config must be a JSON object")
        file_cfg.pop("command", None)
        options = file_cfg.pop("options", {}) or {}
        merged.update(file_cfg)
        merged["options"].update(options)
    for key, value in flags.items():
        if value is None:
            continue
        if key == "options":
            merged["options"].update({k: v for k, v in value.items() if v is not None})
        else:
            merged[key] = value
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise InvalidInput(f"invalid run configuration: {e}")


def run_command(ctx, command, flags, body):
    """Validate config, echo run.json, run body(cfg) -> (exit_code, summary), log to the ledger."""
    cfg = None
    try:
        cfg = effective_config(ctx, command, flags)
        os.makedirs(cfg.output_dir, exist_ok=True)
        write_json(os.path.join(cfg.output_dir, "run.json"), cfg.model_dump())
        code, summary = body(cfg)
    except PslabError as e:
        click.echo(f"error: {e}", err=True)
        code, summary = e.exit_code, f"{type(e).__name__}: {e}"
    except OSError as e:
        click.echo(f"I/O error: {e}", err=True)
        code, summary = EXIT_IO, f"I/O: {e}"
    record_run(
        ctx.obj["env"]["database_url"],
        command,
        cfg.model_dump() if cfg is not None else flags,
        code,
        summary,
    )
    ctx.exit(code)
