"""`hsisr-trainer` command-line interface.

Exit codes follow the pipeline's convention: 0 success, 2 validation
problem, 3 numerical failure.
"""

from __future__ import annotations

import sys

import click

from .config import TrainConfig
from .exceptions import NumericalError, TrainerError, ValidationError
from .infer import infer as run_infer
from .train import train as run_train

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _run(fn):
    try:
        fn()
    except NumericalError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except (ValidationError, TrainerError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


@click.group()
def main():
    """Learned abundance super-resolver for the hsisr pipeline."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(),
              help="Training config JSON.")
def train(config_path):
    """Train on a synthetic pair corpus and write a checkpoint."""
    def job():
        cfg = TrainConfig.from_json_file(config_path)
        log = run_train(cfg)
        if log["final_l1"] is not None:
            click.echo(f"trained {log['epochs']} epochs, "
                       f"final L1 {log['final_l1']:.5f}")
        else:
            click.echo("wrote checkpoint of initialized weights (epochs=0)")
    _run(job)


@main.command()
@click.option("--ckpt", "checkpoint_path", required=True, type=click.Path(),
              help="Model checkpoint from `train`.")
@click.option("--in", "in_path", required=True, type=click.Path(),
              help="Low-resolution abundance tensor (a_lr.npy).")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Destination for the super-resolved tensor.")
def infer(checkpoint_path, in_path, out_path):
    """Super-resolve one abundance tensor."""
    def job():
        shape = run_infer(checkpoint_path, in_path, out_path)
        click.echo(f"wrote {out_path} with shape {shape}")
    _run(job)


if __name__ == "__main__":
    main()
