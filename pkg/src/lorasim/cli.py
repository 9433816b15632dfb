"""Command line: ``lorasim simulate``, ``lorasim sweep`` and ``lorasim audit``.

Exit codes: 0 success, 2 configuration error, 3 invariant violation.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .audit import audit_run, find_runs
from .config import ConfigError, SimConfig, load_config, parse_override
from .experiment import RUNTIME_ERRORS, run_sweep, simulate

EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def _load(config: str | None, overrides: tuple[str, ...], seed: int | None,
          replications: int | None) -> SimConfig:
    cfg = load_config(config) if config else SimConfig()
    over = dict(parse_override(o) for o in overrides)
    if seed is not None:
        over["scenario.master_seed"] = seed
    if replications is not None:
        over["scenario.replications"] = replications
    return cfg.with_overrides(over) if over else cfg


def _guard(fn):
    try:
        return fn()
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except RUNTIME_ERRORS as exc:
        click.echo(f"invariant violation: {exc}", err=True)
        sys.exit(EXIT_INVARIANT)


@click.group()
@click.version_option(package_name="artifact")
def main() -> None:
    """Single-gateway LoRaWAN Class-A cell simulator."""


@main.command("simulate")
@click.argument("config", type=click.Path(dir_okay=False), required=False)
@click.option("--out", "out", required=True, type=click.Path(file_okay=False), help="output directory")
@click.option("--seed", type=int, default=None, help="master seed (overrides the config)")
@click.option("--replications", type=int, default=None)
@click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE",
              help="dotted config key, e.g. gateway.duplex=full (repeatable)")
@click.option("--no-logs", is_flag=True, help="write only metrics.csv and aggregate.csv")
@click.option("--audit/--no-audit", default=True, help="audit the written logs (exit 3 on failure)")
@click.option("-q", "--quiet", is_flag=True)
def simulate_cmd(config, out, seed, replications, overrides, no_logs, audit, quiet):
    """Run independent replications of CONFIG (TOML)."""
    say = None if quiet else click.echo

    def go():
        cfg = _load(config, overrides, seed, replications)
        rows = simulate(cfg, Path(out), logs=not no_logs, progress=say)
        if audit and not no_logs:
            failed = False
            for run in find_runs(Path(out)):
                rep = audit_run(run)
                if say:
                    say(rep.summary())
                failed |= not rep.ok
            if failed:
                click.echo("audit failed", err=True)
                sys.exit(EXIT_INVARIANT)
        return rows

    _guard(go)


@main.command("sweep")
@click.argument("config", type=click.Path(dir_okay=False), required=False)
@click.option("--out", "out", required=True, type=click.Path(file_okay=False))
@click.option("--axis", default=None, help="lambda, n_devices, policy or any dotted key")
@click.option("--points", default=None, help="comma-separated values (TOML literals)")
@click.option("--seed", type=int, default=None)
@click.option("--replications", type=int, default=None)
@click.option("--override", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--jobs", type=int, default=1, show_default=True, help="parallel worker processes")
@click.option("-q", "--quiet", is_flag=True)
def sweep_cmd(config, out, axis, points, seed, replications, overrides, jobs, quiet):
    """Sweep one axis (and the [sweep] variants) of CONFIG."""

    def go():
        cfg = _load(config, overrides, seed, replications)
        pts = None
        if points is not None:
            pts = [parse_override(f"p={p}")[1] for p in points.split(",") if p.strip()]
        rows, failures = run_sweep(cfg, Path(out), axis=axis, points=pts, jobs=jobs,
                                   progress=None if quiet else click.echo)
        for f in failures:
            click.echo(f"failed: {f['variant']} {f['point']} rep {f['replication']}: {f['error']}",
                       err=True)
        click.echo(f"{len(rows)} rows, {len(failures)} failures -> {out}")

    _guard(go)


@main.command("audit")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
def audit_cmd(directory):
    """Check duty cycle, window timing and outcome conservation from logs."""
    runs = find_runs(Path(directory))
    if not runs:
        click.echo("no transmissions.csv found", err=True)
        sys.exit(EXIT_CONFIG)
    ok = True
    for run in runs:
        rep = audit_run(run)
        click.echo(rep.summary())
        for line in (rep.dc_violations + rep.timing_violations)[:10]:
            click.echo(f"  {line}")
        ok &= rep.ok
    sys.exit(0 if ok else EXIT_INVARIANT)


if __name__ == "__main__":  # pragma: no cover
    main()
