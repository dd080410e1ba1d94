import os
import sys
import logging
import textwrap

import click
from pydantic import ValidationError

from .env import resolve_spec
from .experiment import density_rows, run_compare, run_perfect, run_sample
from .export import OutputPaths, write_histogram, write_rows, write_summary
from .perfect import CouplingDidNotConverge
from .schemas import ALGORITHM_NAMES, ConfigError, validation_message
from .settings import DEFAULT_CONFIG_FILE

logger = logging.getLogger("kacsim")

COMPARE_FIELDS = ['algorithm', 'N', 'dt', 'mean_tvn', 'sd_tvn', 'tvn_repeats']
DRAW_FIELDS = ['replicate', 'v1', 'coupling_time', 'final_diameter']


def tqs(s):
    # Normalize triple-quoted strings
    s = textwrap.dedent(s)
    lines = [line.strip() for line in s.splitlines()]
    return textwrap.fill(' '.join(line for line in lines if line), width=80) + "\n"


class LogFilter(logging.Filter):
    """Keep kacsim records and warnings; drop INFO chatter from other libraries."""

    def filter(self, record):
        return record.name.startswith("kacsim") or record.levelno >= logging.WARNING


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler()],
        force=True,
    )
    for handler in logging.getLogger().handlers:
        handler.addFilter(LogFilter())


def common_options(fn):
    options = [
        click.option('-c', '--config', type=str, default=None, help=tqs(f"""
            Path to a KEY=value config file. Defaults to '{DEFAULT_CONFIG_FILE}'
            when that file exists. Flags override values from the file.
        """)),
        click.option('-i', '--ignore-env', is_flag=True, default=False, help=tqs("""
            Ignore KACSIM_* environment variables and the default config file.
        """)),
        click.option('-o', '--out', type=str, default=None, help=tqs("""
            Output path. Writes <out>.csv and <out>.json; without it the CSV goes
            to stdout and the summary to stderr.
        """)),
        click.option('-v', '--verbose', is_flag=True, default=False,
                     help="Print kacsim logs while running."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def run_options(fn):
    options = [
        click.option('--n', 'n_particles', type=str, default=None,
                     help="Number of particles N, or a comma-separated list for compare."),
        click.option('--lambda', 'lam', type=float, default=None,
                     help="Collision rate. Defaults to sqrt(pi)/2, the rate of the exact solution."),
        click.option('--t', 't_final', type=str, default=None, help="Sampling time t."),
        click.option('--dt', type=str, default=None,
                     help="Time step (nanbu variants), or a comma-separated list for compare."),
        click.option('--replicates', type=int, default=None,
                     help="Independent replicates (one sample each). Defaults to 100000."),
        click.option('--seed', type=int, default=None, help="Experiment seed."),
        click.option('--bins', type=str, default=None,
                     help="Histogram bins 'lo:hi:width'. Defaults to -5:5:0.1."),
        click.option('--workers', type=int, default=None, help="Worker processes. Defaults to 1."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _execute(command, values, config, ignore_env, verbose, action):
    configure_logging(verbose)
    if config is None and not ignore_env and os.path.exists(DEFAULT_CONFIG_FILE):
        config = DEFAULT_CONFIG_FILE
    if config:
        click.echo(f"Loading kacsim config from '{config}'", err=True)
    try:
        spec = resolve_spec(command, values, config, ignore_env)
        action(spec)
    except ValidationError as e:
        click.echo(f"Configuration error: {validation_message(e)}", err=True)
        sys.exit(2)
    except ConfigError as e:
        click.echo(f"Configuration error: {e}", err=True)
        sys.exit(2)
    except (ValueError, CouplingDidNotConverge) as e:
        logger.error(str(e))
        sys.exit(1)


@click.group(help=tqs("""
    Monte Carlo samplers for the Kac collision model, validated against the
    Krook-Wu exact solution.
"""))
def cli():
    pass


@cli.command(help=tqs("""
    Evaluate the initial, exact or limit density on a grid of points and
    write (v, density) rows.
"""))
@click.option('--curve', type=click.Choice(['initial', 'exact', 'limit']), default=None,
              help="Curve to evaluate.")
@click.option('--t', 't_final', type=str, default=None, help="Time t, required for the exact curve.")
@click.option('--grid', type=str, default=None, help="Grid 'lo:hi:step'; both ends are included.")
@common_options
def density(curve, t_final, grid, config, ignore_env, out, verbose):
    def action(spec):
        rows = density_rows(spec)
        csv_file = OutputPaths(spec.out).csv if spec.out else None
        write_rows(rows, ['v', 'density'], csv_file)

    _execute("density", dict(curve=curve, t_final=t_final, grid=grid, out=out),
             config, ignore_env, verbose, action)


@cli.command(help=tqs("""
    Run independent replicates of one sampler, histogram particle 1's velocity
    and report the TVN against the exact solution.
"""))
@click.option('-a', '--algorithm', 'algorithms', type=click.Choice(ALGORITHM_NAMES), default=None,
              help="Sampler; 'oracle' draws from the exact solution directly. Defaults to bird.")
@click.option('--tail-from', type=float, default=None,
              help="Also write the upper-tail table for bins starting at or above this velocity.")
@run_options
@common_options
def sample(algorithms, tail_from, n_particles, lam, t_final, dt, replicates, seed, bins, workers,
           config, ignore_env, out, verbose):
    def action(spec):
        report = run_sample(spec)
        paths = OutputPaths(spec.out) if spec.out else None
        write_histogram(report.rows, paths.csv if paths else None)
        write_summary(report.summary, paths.json if paths else None)
        if report.tail_rows is not None:
            write_histogram(report.tail_rows, paths.part("tail") if paths else None, tail=True)

    values = dict(
        algorithms=algorithms, tail_from=tail_from, n_particles=n_particles, lam=lam,
        t_final=t_final, dt=dt, replicates=replicates, seed=seed, bins=bins, workers=workers, out=out,
    )
    _execute("sample", values, config, ignore_env, verbose, action)


@cli.command(help=tqs("""
    Average repeated TVN estimates for every combination of algorithm, N and
    dt and write one long-format row per combination.
"""))
@click.option('-a', '--algorithm', 'algorithms', type=str, default=None,
              help=f"Comma-separated samplers from: {', '.join(ALGORITHM_NAMES)}.")
@click.option('--tvn-repeats', type=int, default=None,
              help="Independent TVN estimates averaged per combination. Defaults to 1.")
@run_options
@common_options
def compare(algorithms, tvn_repeats, n_particles, lam, t_final, dt, replicates, seed, bins, workers,
            config, ignore_env, out, verbose):
    def action(spec):
        rows, summary = run_compare(spec)
        paths = OutputPaths(spec.out) if spec.out else None
        write_rows(rows, COMPARE_FIELDS, paths.csv if paths else None)
        write_summary(summary, paths.json if paths else None)

    values = dict(
        algorithms=algorithms, tvn_repeats=tvn_repeats, n_particles=n_particles, lam=lam,
        t_final=t_final, dt=dt, replicates=replicates, seed=seed, bins=bins, workers=workers, out=out,
    )
    _execute("compare", values, config, ignore_env, verbose, action)


@cli.command(help=tqs("""
    Draw epsilon-perfect samples of the stationary velocity vector by coupling
    from the past and histogram the coordinate samples.
"""))
@click.option('--n', 'n_particles', type=str, default=None, help="Number of particles N.")
@click.option('--epsilon', type=float, default=None,
              help="Coalescence tolerance on the corner diameter. Defaults to 1e-6.")
@click.option('--energy', type=float, default=None, help="Sphere energy E. Defaults to 1.5 N.")
@click.option('--step-back', type=click.Choice(['doubling', 'linear']), default=None,
              help="Start times T = 1, 2, 4, ... (doubling) or T = 1, 2, 3, ... (linear).")
@click.option('--harvest-all', is_flag=True, default=None,
              help="Histogram all N coordinates of every draw instead of the first.")
@click.option('--replicates', type=int, default=None, help="Number of draws. Defaults to 100000.")
@click.option('--seed', type=int, default=None, help="Experiment seed.")
@click.option('--bins', type=str, default=None, help="Histogram bins 'lo:hi:width'.")
@click.option('--workers', type=int, default=None, help="Worker processes. Defaults to 1.")
@common_options
def perfect(n_particles, epsilon, energy, step_back, harvest_all, replicates, seed, bins, workers,
            config, ignore_env, out, verbose):
    def action(spec):
        report = run_perfect(spec)
        paths = OutputPaths(spec.out) if spec.out else None
        write_histogram(report.rows, paths.csv if paths else None)
        write_summary(report.summary, paths.json if paths else None)
        if paths:
            write_rows(report.draws, DRAW_FIELDS, paths.part("draws"))

    values = dict(
        n_particles=n_particles, epsilon=epsilon, energy=energy, step_back=step_back,
        harvest_all=harvest_all, replicates=replicates, seed=seed, bins=bins, workers=workers, out=out,
    )
    _execute("perfect", values, config, ignore_env, verbose, action)


def main():
    cli()


if __name__ == "__main__":
    main()
