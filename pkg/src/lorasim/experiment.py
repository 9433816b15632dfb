"""Replications and parameter sweeps on top of :class:`Simulation`."""

from __future__ import annotations

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .config import AXIS_ALIASES, ConfigError, SimConfig, Variant
from .medium import OUTCOMES, UL
from .metrics import aggregate, compute_metrics
from .outputs import write_dicts, write_run
from .phyreg import DutyCycleViolation
from .simcore import SchedulingError, derive_seed
from .simulation import Simulation


class InvariantViolation(RuntimeError):
    """A run broke a model invariant (CLI exit code 3)."""


RUNTIME_ERRORS = (InvariantViolation, DutyCycleViolation, SchedulingError)


def replication_seed(master_seed: int, k: int) -> int:
    """Seed of replication ``k``; independent of how many replications run."""
    return derive_seed(master_seed, "replication", k) & ((1 << 63) - 1)


def check_run(sim: Simulation) -> None:
    """Post-run invariants every replication must satisfy."""
    ul = [tx for tx in sim.transmissions if tx.direction == UL]
    tags = {o: 0 for o in OUTCOMES}
    for tx in ul:
        if tx.outcome not in tags:
            raise InvariantViolation(f"uplink {tx.id} has no outcome tag ({tx.outcome!r})")
        tags[tx.outcome] += 1
        if tx.attempt > sim.cfg.mac.max_attempts:
            raise InvariantViolation(f"uplink {tx.id} is attempt {tx.attempt}")
    if sum(tags.values()) != len(ul):
        raise InvariantViolation("outcome counts do not add up to uplink count")
    if sim.cfg.gateway.conflict_policy == "rx_priority" and tags["T"]:
        raise InvariantViolation("receptions aborted under RX priority")
    locked = sim.gateway.locked_paths
    if locked > len(sim.gateway.paths):
        raise InvariantViolation("more locked paths than reception paths")


def run_replication(cfg: SimConfig, seed: int, *, out: Path | None = None) -> dict[str, Any]:
    """Run one replication, check it and return its flat metrics row."""
    sim = Simulation(cfg, seed, record_windows=out is not None).run()
    check_run(sim)
    if out is not None:
        write_run(sim, out)
    return compute_metrics(sim).flat()


def simulate(cfg: SimConfig, out: Path, *, replications: int | None = None,
             master_seed: int | None = None, logs: bool = True,
             progress: Callable[[str], None] | None = None) -> list[dict]:
    """Independent replications of one configuration.

    Writes ``metrics.csv`` (one row per replication) and ``aggregate.csv``;
    with ``logs`` each replication's CSV logs go to ``rep_<k>/``.
    """
    reps = replications or cfg.scenario.replications
    master = cfg.scenario.master_seed if master_seed is None else master_seed
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in range(reps):
        seed = replication_seed(master, k)
        row = run_replication(cfg, seed, out=out / f"rep_{k:03d}" if logs else None)
        rows.append({"replication": k, "seed": seed, **row})
        if progress:
            progress(f"replication {k + 1}/{reps}: ulpdr={row['ulpdr']:.4f} cpsr={row['cpsr']:.4f}")
    write_dicts(out / "metrics.csv", rows)
    agg = aggregate([{k: v for k, v in r.items() if k not in ("replication", "seed")} for r in rows])
    write_dicts(out / "aggregate.csv", [agg])
    return rows


# ------------------------------------------------------------------ sweeps
@dataclass(frozen=True)
class SweepTask:
    variant: str
    point: Any
    replication: int
    seed: int
    config: SimConfig | None
    error: str | None = None  # set when the point's config is invalid


def point_label(point: Any) -> str:
    """Sweep point as written in the CSVs (verbatim, not float-formatted)."""
    return "" if point is None else str(point)


def axis_key(axis: str) -> str | None:
    if axis in ("policy", "none", ""):
        return None
    return AXIS_ALIASES.get(axis, axis)


def sweep_tasks(cfg: SimConfig, axis: str, points: list, variants: list[Variant],
                replications: int, master_seed: int) -> list[SweepTask]:
    key = axis_key(axis)
    if key is not None:
        SimConfig.check_key(key)
    for v in variants:
        for k in v.overrides:
            SimConfig.check_key(k)
    if key is None or not points:
        points = [None]
    if not variants:
        variants = [Variant(name="baseline")]
    tasks = []
    for v in variants:
        for p in points:
            over = dict(v.overrides)
            if key is not None and p is not None:
                over[key] = p
            try:
                point_cfg, error = cfg.with_overrides(over), None
            except ConfigError as exc:
                point_cfg, error = None, f"ConfigError: {exc}"
            for k in range(replications):
                tasks.append(SweepTask(v.name, p, k, replication_seed(master_seed, k), point_cfg,
                                       error))
    return tasks


def _run_task(task: SweepTask) -> tuple[dict | None, str | None]:
    if task.error is not None:
        return None, task.error
    try:
        return run_replication(task.config, task.seed), None
    except Exception as exc:  # recorded per point, the sweep goes on
        return None, f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}"


def run_sweep(cfg: SimConfig, out: Path, *, axis: str | None = None, points: list | None = None,
              variants: list[Variant] | None = None, replications: int | None = None,
              master_seed: int | None = None, jobs: int = 1,
              progress: Callable[[str], None] | None = None) -> tuple[list[dict], list[dict]]:
    """Run every (variant, point, replication) and write ``metrics.csv``,
    ``aggregate.csv`` and, if anything failed, ``failures.csv``."""
    sw = cfg.sweep
    axis = sw.axis if axis is None else axis
    points = list(sw.points) if points is None else points
    variants = list(sw.variants) if variants is None else variants
    reps = replications or cfg.scenario.replications
    master = cfg.scenario.master_seed if master_seed is None else master_seed
    tasks = sweep_tasks(cfg, axis, points, variants, reps, master)
    out.mkdir(parents=True, exist_ok=True)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = []
        for i, t in enumerate(tasks):
            results.append(_run_task(t))
            if progress:
                progress(f"[{i + 1}/{len(tasks)}] {t.variant} {axis}={t.point} rep {t.replication}")

    rows, failures = [], []
    groups: dict[tuple, list[dict]] = {}
    for t, (row, err) in zip(tasks, results):
        head = {"variant": t.variant, "axis": axis, "point": point_label(t.point),
                "replication": t.replication, "seed": t.seed}
        if err is not None:
            failures.append({**head, "error": err.splitlines()[0]})
            continue
        rows.append({**head, **row})
        groups.setdefault((t.variant, repr(t.point)), []).append(row)

    agg_rows = []
    seen = set()
    for t in tasks:
        gk = (t.variant, repr(t.point))
        if gk in seen or gk not in groups:
            continue
        seen.add(gk)
        agg_rows.append({"variant": t.variant, "axis": axis, "point": point_label(t.point),
                         **aggregate(groups[gk])})
    write_dicts(out / "metrics.csv", rows)
    write_dicts(out / "aggregate.csv", agg_rows)
    if failures:
        write_dicts(out / "failures.csv", failures)
    return rows, failures
