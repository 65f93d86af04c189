"""Command line interface: ``magdisk spectrum|verify|sweep|oracle|cache``.

Exit codes: 0 when no report is violated, 2 when at least one is, 1 on
any operational error (bad scenario file, unwritable output, ...).
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import __version__
from .io import EmitError, ScenarioFileError, emit, parse_scenario
from .model import ScenarioError
from .oracles import bessel_dirichlet_spectrum, cartesian_2d_spectrum, landau_limit_check
from .runner import SWEEP_AXES, ResultCache, exit_code, run_spectrum, run_sweep, run_verify

FORMATS = click.Choice(["csv", "json", "table"])


class OperationalError(click.ClickException):
    exit_code = 1


def _load(path, lam, sigma):
    scenario = parse_scenario(path)
    if lam is not None:
        scenario = scenario.with_params(lambda_shift=lam)
    if sigma is not None:
        scenario = scenario.with_params(sigma=sigma)
    return scenario


def _inequalities(text):
    if not text:
        return None
    return [s for s in (t.strip() for t in text.split(",")) if s]


def _values(text):
    """Comma list ``1,2,5`` or inclusive range ``start:stop:count``."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise click.BadParameter("range must be start:stop:count")
        return [float(v) for v in np.linspace(float(parts[0]), float(parts[1]), int(parts[2]))]
    return [float(v) for v in text.split(",") if v.strip()]


def _output(text, out):
    if out is None:
        click.echo(text, nl=False)


def _report_skipped(records):
    seen = set()
    for rec in records:
        for s in rec.skipped:
            line = f"skipped {s['inequality']}: {s['reason']}"
            if line not in seen:
                seen.add(line)
                click.echo(line, err=True)


def _cache(no_cache):
    return None if no_cache else ResultCache()


common = [
    click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False),
                 help="Scenario TOML file."),
    click.option("--lambda", "lam", type=float, default=None, help="Override params.lambda_shift (Λ)."),
    click.option("--sigma", type=float, default=None, help="Override params.sigma."),
    click.option("--format", "fmt", type=FORMATS, default="table", show_default=True),
    click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write output to this file."),
    click.option("--no-cache", is_flag=True, help="Bypass the on-disk result cache."),
]


def with_common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="magdisk")
def cli():
    """Disk spectra for radial magnetic fields and eigenvalue-moment bounds."""


@cli.command()
@with_common
def spectrum(scenario_path, lam, sigma, fmt, out, no_cache):
    """Assembled eigenvalues up to Λ."""
    scenario = _load(scenario_path, lam, sigma)
    rec = run_spectrum(scenario, cache=_cache(no_cache))
    _output(emit([rec], fmt, out, what="spectrum"), out)


@cli.command()
@with_common
@click.option("--inequalities", default=None, help="Comma-separated inequality ids (default: all applicable).")
def verify(scenario_path, lam, sigma, fmt, out, no_cache, inequalities):
    """Evaluate inequalities and report verdicts."""
    scenario = _load(scenario_path, lam, sigma)
    rec = run_verify(scenario, _inequalities(inequalities), cache=_cache(no_cache))
    _report_skipped([rec])
    _output(emit([rec], fmt, out), out)
    sys.exit(exit_code([rec]))


@cli.command()
@with_common
@click.option("--axis", type=click.Choice(SWEEP_AXES), required=True)
@click.option("--values", "values_text", required=True, help="Comma list or start:stop:count.")
@click.option("--inequalities", default=None)
@click.option("--workers", type=int, default=1, show_default=True)
def sweep(scenario_path, lam, sigma, fmt, out, no_cache, axis, values_text, inequalities, workers):
    """Verify inequalities at every value of one parameter."""
    scenario = _load(scenario_path, lam, sigma)
    records = run_sweep(scenario, axis, _values(values_text), _inequalities(inequalities), workers,
                        cache=_cache(no_cache))
    _report_skipped(records)
    _output(emit(records, fmt, out), out)
    sys.exit(exit_code(records))


@cli.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--method", type=click.Choice(["bessel", "landau", "cartesian2d"]), required=True)
@click.option("--count", type=int, default=4, show_default=True)
@click.option("--grid", type=int, default=None, help="2D grid size (default numerics.oracle_2d_grid).")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def oracle(scenario_path, method, count, grid, out):
    """Independent reference eigenvalues for a scenario (JSON)."""
    scenario = parse_scenario(scenario_path)
    if method == "bessel":
        res = bessel_dirichlet_spectrum(scenario.r0, count, count)
    elif method == "landau":
        fld = scenario.field
        if not hasattr(fld, "B0"):
            raise OperationalError("Landau oracle needs a constant field")
        res = landau_limit_check(fld.B0, scenario.r0)
    else:
        res = cartesian_2d_spectrum(scenario, count, grid)
    text = json.dumps(res.to_dict(), sort_keys=True, indent=1) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@cli.command()
@click.argument("action", type=click.Choice(["inspect", "clear"]))
def cache(action):
    """Inspect or clear the on-disk result cache."""
    store = ResultCache()
    if action == "clear":
        click.echo(f"removed {store.clear()} entries from {store.root}")
        return
    entries = store.entries()
    click.echo(f"{store.root}: {len(entries)} entries")
    for e in entries:
        click.echo(f"{e['key']}  {e['scenario_hash']}  {e['command']}  v{e['version']}  {e['bytes']} B")


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="magdisk", standalone_mode=False)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 1)
        sys.exit(code)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except (ScenarioFileError, ScenarioError, EmitError, ValueError, OSError, RuntimeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    sys.exit(0)


if __name__ == "__main__":
    main()
