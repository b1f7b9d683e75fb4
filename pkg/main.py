from pathlib import Path

import click

from src.errors import BuffdynError, ConfigParseError
from src.experiments.Experiment import Experiment
from src.experiments.ExperimentConfig import ExperimentConfig
from src.experiments.default_experiments import PRESETS
from src.utils import configure_logging, get_logger

logger = get_logger(__name__)


def load_config(source: str) -> ExperimentConfig:
    """an INI file path, or the id of one of the preset experiments"""
    if source in PRESETS and not Path(source).exists():
        return PRESETS[source]()
    return ExperimentConfig.from_file(source)


def run_experiment(ctx: click.Context, source: str, kind: str = None):
    options = ctx.obj
    try:
        config = load_config(source)
        if kind is not None and config.kind != kind:
            raise ConfigParseError(f"{source} configures a {config.kind} experiment, expected {kind}")
        report = Experiment(config, out_dir=options["out_dir"], threads=options["threads"],
                            progress=options["verbose"]).run()
    except BuffdynError as e:
        click.echo(f"error: {e}", err=True)
        ctx.exit(1)
    click.echo(f"{report.id}: {'pass' if report.passed else 'FAIL'} ({report.wall_clock:.1f}s) -> {options['out_dir']}")
    ctx.exit(report.exit_code)


@click.group()
@click.option("--out-dir", type=click.Path(file_okay=False), default="out", show_default=True,
              help="directory for the JSON report, CSV tables and SVG figures")
@click.option("--threads", type=click.IntRange(min=1), envvar="BUFFDYN_THREADS", default=1, show_default=True,
              help="worker threads for experiment rows (env BUFFDYN_THREADS)")
@click.option("--verbose", is_flag=True, help="debug logging and progress bars")
@click.pass_context
def buffdyn(ctx, out_dir, threads, verbose):
    """numerical experiments on Buff forms, rectifying coordinates and external rays"""
    configure_logging(verbose)
    ctx.obj = {"out_dir": Path(out_dir), "threads": threads, "verbose": verbose}


@buffdyn.command()
@click.argument("config")
@click.pass_context
def run(ctx, config):
    """run any experiment; CONFIG is an INI file or a preset id"""
    run_experiment(ctx, config)


@buffdyn.command()
@click.argument("config")
@click.pass_context
def portrait(ctx, config):
    """phase portrait of a form"""
    run_experiment(ctx, config, kind="phase_portrait")


@buffdyn.command()
@click.argument("config")
@click.pass_context
def spiral(ctx, config):
    """lifted circles and their net translations"""
    run_experiment(ctx, config, kind="spiral")


@buffdyn.command("audit-residues")
@click.argument("config")
@click.pass_context
def audit_residues(ctx, config):
    """closed-form against numeric residues at every fixed point"""
    run_experiment(ctx, config, kind="residue_audit")


@buffdyn.command()
def presets():
    """list the preset experiment ids"""
    for name, preset in sorted(PRESETS.items()):
        click.echo(f"{name}\t{preset().kind}")


if __name__ == '__main__':
    buffdyn()
