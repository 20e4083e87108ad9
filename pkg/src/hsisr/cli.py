"""`hsisr` command-line interface.

Every subcommand takes a JSON pipeline config; exit code 0 means success,
2 a validation problem (files, shapes, config, lock), 3 a numerical failure.
"""

from __future__ import annotations

import sys

import click

from . import pipeline
from .exceptions import HsisrError, NumericalError, ValidationError

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _load_config(config_path, out, seed):
    cfg = pipeline.PipelineConfig.from_json_file(config_path)
    if out is not None:
        cfg = pipeline.PipelineConfig.from_dict({**cfg.to_dict(), "workdir": str(out)})
    if seed is not None:
        cfg = pipeline.PipelineConfig.from_dict({**cfg.to_dict(), "base_seed": seed})
    return cfg


def _run(fn, *args, **kwargs):
    try:
        fn(*args, **kwargs)
    except NumericalError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except (ValidationError, HsisrError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)


def _common(fn):
    fn = click.option("--config", "config_path", required=True,
                      type=click.Path(), help="Pipeline config JSON.")(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="Override the work directory.")(fn)
    fn = click.option("--seed", type=click.IntRange(min=0), default=None,
                      help="Override the base seed.")(fn)
    return fn


@click.group()
def main():
    """Unsupervised hyperspectral single-image super-resolution pipeline."""


@main.command()
@_common
def degrade(config_path, out, seed):
    """Blur + downsample the input cube into the low-resolution cube."""
    _run(lambda: pipeline.cmd_degrade(_load_config(config_path, out, seed)))


@main.command()
@_common
def unmix(config_path, out, seed):
    """Extract endmembers (S.npy) and abundances (a_lr.npy)."""
    _run(lambda: pipeline.cmd_unmix(_load_config(config_path, out, seed)))


@main.command()
@_common
@click.option("--count", type=click.IntRange(min=1), default=None,
              help="Override the corpus size.")
@click.option("--workers", type=click.IntRange(min=1), default=1,
              help="Parallel workers for corpus generation.")
def synth(config_path, out, seed, count, workers):
    """Generate the synthetic HR/LR abundance training corpus."""
    _run(lambda: pipeline.cmd_synth(_load_config(config_path, out, seed),
                                    count=count, base_seed=seed, workers=workers))


@main.command()
@_common
def baseline(config_path, out, seed):
    """Score bicubic upsampling of the low-resolution cube."""
    _run(lambda: pipeline.cmd_baseline(_load_config(config_path, out, seed)))


@main.command()
@_common
@click.option("--a-sr", "a_sr_path", required=True, type=click.Path(),
              help="Super-resolved abundance tensor from the trainer.")
def reconstruct(config_path, out, seed, a_sr_path):
    """Mix super-resolved abundances into hsi_sr.npy and score it."""
    _run(lambda: pipeline.cmd_reconstruct(_load_config(config_path, out, seed),
                                          a_sr_path))


@main.command()
@_common
@click.option("--ref", "ref_path", type=click.Path(), default=None,
              help="Reference cube (default: work-directory hsi_hr.npy).")
@click.option("--est", "est_path", type=click.Path(), default=None,
              help="Estimate cube (default: work-directory hsi_sr.npy).")
def eval(config_path, out, seed, ref_path, est_path):
    """Patch-grid PSNR/SAM/ERGAS for a reference/estimate cube pair."""
    _run(lambda: pipeline.cmd_eval(_load_config(config_path, out, seed),
                                   ref_path=ref_path, est_path=est_path))


if __name__ == "__main__":
    main()
