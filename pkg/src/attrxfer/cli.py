"""Command-line surface: train, attribute, evaluate, plot, report.

Every command takes ``--config FILE`` plus zero or more ``--set key=value``
scalar overrides. Failures exit nonzero after printing one machine-readable
line ``attrxfer-error: {...}`` on stderr.
"""

from __future__ import annotations

import json
import logging
import sys

import click

from . import pipeline
from .runconfig import apply_overrides, default_config, load_config


def _load(config_path, overrides):
    config = load_config(config_path) if config_path else default_config()
    return apply_overrides(config, overrides)


def _fail(exc) -> "NoReturn":
    doc = {"type": type(exc).__name__, "message": str(exc)}
    print(f"attrxfer-error: {json.dumps(doc)}", file=sys.stderr)
    sys.exit(2)


config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True, dir_okay=False),
    default=None, help="YAML run configuration.")
set_option = click.option(
    "--set", "overrides", multiple=True, metavar="KEY.PATH=VALUE",
    help="Override a scalar config key (repeatable).")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log at INFO level.")
def main(verbose):
    """Feature-attribution transfer benchmark."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@config_option
@set_option
def train(config_path, overrides):
    """Train the configured models; write weights and history files."""
    try:
        config = _load(config_path, overrides)
        results = pipeline.train_models(config, progress=True)
    except Exception as exc:
        _fail(exc)
    for model_id, info in results.items():
        click.echo(f"{model_id}: test_accuracy={info['test_accuracy']:.4f} "
                   f"weights={info['weights']}")


@main.command()
@config_option
@set_option
@click.option("--keep-going", is_flag=True,
              help="Skip failing images instead of aborting.")
def attribute(config_path, overrides, keep_going):
    """Populate the attribution cache for every test image."""
    try:
        config = _load(config_path, overrides)
        stats = pipeline.run_attribute(config, keep_going=keep_going,
                                       progress=True)
    except Exception as exc:
        _fail(exc)
    click.echo(f"{stats['n_maps']}/{stats['n_images']} maps in "
               f"{stats['cache']} (config {stats['config_hash']})")


@main.command()
@config_option
@set_option
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Concurrent evaluation streams.")
@click.option("--allow-compute", is_flag=True,
              help="Compute missing attributions instead of requiring a "
                   "populated cache.")
def evaluate(config_path, overrides, jobs, allow_compute):
    """Evaluate every model in I and F modes; write the report files."""
    try:
        config = _load(config_path, overrides)
        report, paths = pipeline.run_evaluate(
            config, jobs=jobs, require_cached=not allow_compute,
            progress=True)
    except Exception as exc:
        _fail(exc)
    for rec in report.records:
        click.echo(f"{rec.target_model_id} ({rec.input_mode}): "
                   f"accuracy={rec.accuracy:.4f} f1={rec.f1:.4f}")
    click.echo(f"wrote {len(paths)} files under "
               f"{pipeline.report_dir(config)}")


@main.command()
@config_option
@set_option
@click.option("--triptychs", type=int, default=0, show_default=True,
              help="Also render input/map/feature panels for the first N "
                   "test images.")
def plot(config_path, overrides, triptychs):
    """Render histogram panels and the combined grid from report.json."""
    try:
        config = _load(config_path, overrides)
        paths = pipeline.run_plot(config, triptychs=triptychs)
    except Exception as exc:
        _fail(exc)
    for path in paths:
        click.echo(str(path))


@main.command()
@config_option
@set_option
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Also write the rendered table to this file.")
def report(config_path, overrides, out):
    """Render the two-row summary table from an existing report."""
    from .protocol.records import TransferReport
    from .protocol.rendering import render_report_table

    try:
        config = _load(config_path, overrides)
        report_path = pipeline.report_dir(config) / "report.json"
        if not report_path.exists():
            raise FileNotFoundError(f"missing report file {report_path}; "
                                    "run `attrxfer evaluate` first")
        doc = TransferReport.from_dict(json.loads(report_path.read_text()))
        table = render_report_table(doc)
        if out:
            from pathlib import Path
            Path(out).write_text(table)
    except Exception as exc:
        _fail(exc)
    click.echo(table, nl=False)


if __name__ == "__main__":
    main()
