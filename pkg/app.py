import logging
import os
import sys

import click
from dotenv import load_dotenv

load_dotenv()

from database import recent_runs


def settings():
    """Environment configuration with defaults; read per invocation."""
    return {
        "threads": int(os.environ.get("PSLAB_THREADS", "1")),
        "database_url": os.environ.get("PSLAB_DATABASE_URL", "sqlite:///pslab.db"),
        "output_dir": os.environ.get("PSLAB_OUTPUT_DIR", "out"),
        "seed": int(os.environ.get("PSLAB_SEED", str(0x5EED)), 0),
        "log_level": os.environ.get("PSLAB_LOG_LEVEL", "WARNING"),
    }


@click.group()
@click.option("--config", "config_path", default=None, help="JSON file with run options.")
@click.pass_context
def cli(ctx, config_path):
    """Pseudospectra laboratory."""
    env = settings()
    logging.basicConfig(
        level=getattr(logging, env["log_level"].upper(), logging.WARNING),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    ctx.obj = {"env": env, "config_path": config_path}


@cli.command()
@click.option("--limit", default=50, show_default=True)
@click.pass_context
def runs(ctx, limit):
    """List recent runs from the ledger."""
    url = ctx.obj["env"]["database_url"]
    if not url:
        click.echo("run ledger disabled (PSLAB_DATABASE_URL is empty)", err=True)
        ctx.exit(2)
    for row in recent_runs(url, limit):
        click.echo(f"{row['id']:>5}  {row['created_at']}  {row['command']:<10} exit={row['exit_code']}  {row['summary']}")


# --- Register commands ---

from commands.field import field
from commands.check import check
from commands.shapes import shapes
from commands.oscillate import oscillate

cli.add_command(field)
cli.add_command(check)
cli.add_command(shapes)
cli.add_command(oscillate)


if __name__ == "__main__":
    cli()
