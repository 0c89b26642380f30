"""Command line front door: single runs, batches, the live service, benchmarks."""

import csv
import dataclasses
import json
import sys
import time

import click
import numpy as np

from .errors import ScenarioValidationError
from .planner import PlanOutcome, plan
from .simharness import export_trace, load_scenario, metrics, run_batch

EXIT_VALIDATION = 2
EXIT_PLANNING = 3


def _load(source):
    try:
        return load_scenario(source)
    except ScenarioValidationError as err:
        click.echo(f"scenario error: {err}", err=True)
        sys.exit(EXIT_VALIDATION)


@click.group()
def main():
    """Reactive constrained-velocity planning toolkit."""


@main.command("run")
@click.argument("scenario")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), default=None,
              help="Write a per-step trace to this file.")
@click.option("--format", "trace_format", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True, help="Trace file format.")
def run_cmd(scenario, trace_path, trace_format):
    """Plan SCENARIO once and report the outcome.

    SCENARIO is a scene file path or the name of a bundled scene.
    """
    sc = _load(scenario)
    traj = plan(sc)
    row = metrics(traj, scenario_id=sc.name or "run")
    if trace_path:
        export_trace(traj, trace_path, format=trace_format)
    click.echo(
        f"outcome={traj.outcome.value} steps={row.steps} "
        f"path_length={row.path_length:.6f} "
        f"step_median_us={row.wall_time_median * 1e6:.0f}"
    )
    if traj.outcome != PlanOutcome.REACHED_GOAL:
        sys.exit(EXIT_PLANNING)


@main.command("batch")
@click.argument("scenario")
@click.option("--runs", default=10, show_default=True, type=click.IntRange(min=1),
              help="Number of sampled runs.")
@click.option("--seed", default=None, type=int, help="Sampler seed (scene seed when omitted).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write per-run metrics to this CSV file.")
def batch_cmd(scenario, runs, seed, out_path):
    """Plan RUNS sampled instances of SCENARIO and aggregate the metrics.

    Individual failures become rows with success=false; the command itself
    exits 0 once the batch completes.
    """
    sc = _load(scenario)
    try:
        rows, agg = run_batch(sc, runs, seed=seed)
    except ScenarioValidationError as err:
        click.echo(f"scenario error: {err}", err=True)
        sys.exit(EXIT_VALIDATION)
    if out_path:
        _write_metrics_csv(rows, out_path)
    click.echo(" ".join(f"{k}={v}" for k, v in agg.items()))


def _write_metrics_csv(rows, path):
    fields = [f.name for f in dataclasses.fields(rows[0])]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow(dataclasses.asdict(row))


@main.command("serve")
@click.argument("scenario")
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--tick-rate", default=250.0, show_default=True, type=float,
              help="Broadcast rate in Hz.")
@click.option("--filter-a", default=0.9, show_default=True, type=float,
              help="IIR smoothing coefficient for live obstacle updates.")
def serve_cmd(scenario, port, tick_rate, filter_a):
    """Serve SCENARIO interactively over a websocket."""
    sc = _load(scenario)
    from .service import run_server

    run_server(sc, port=port, tick_rate=tick_rate, filter_a=filter_a)


@main.command("bench")
@click.option("--iters", default=300, show_default=True, type=int,
              help="Timing repetitions per kernel.")
def bench_cmd(iters):
    """Time the hot kernels on every available backend."""
    for row in bench_backends(iters):
        click.echo(
            "%-22s %-9s median %8.1f us  (x%.2f vs pure)"
            % (row["kernel"], row["backend"], row["median_us"], row["speedup"])
        )


def _backends():
    from . import _kernels
    from ._kernels import pure

    mods = [pure]
    try:
        from ._kernels import core

        mods.append(core)
    except ImportError:
        pass
    return _kernels.BACKEND, mods


def _qp_workload(rng, n=10, m_ineq=6, meq=2):
    B = rng.normal(size=(n, n))
    G = B @ B.T + n * np.eye(n)
    g = rng.normal(size=n)
    C = rng.normal(size=(n, meq + m_ineq))
    x_feas = rng.normal(size=n)
    slack = np.concatenate([np.zeros(meq), rng.uniform(0.0, 0.5, size=m_ineq)])
    d = C.T @ x_feas - slack
    return G, g, C, d, meq


def bench_backends(iters=300, seed=1234):
    """Median kernel timings per backend; pure numpy is the speedup baseline."""
    rng = np.random.default_rng(seed)
    qps = [_qp_workload(rng) for _ in range(8)]
    p0 = rng.normal(size=(64, 3))
    p1 = rng.normal(size=(64, 3))
    centers = rng.normal(size=(64, 3))
    radii = rng.uniform(0.05, 0.2, size=64)

    active, mods = _backends()
    rows = []
    base = {}
    for mod in mods:
        for kernel, call in (
            ("qp_solve", lambda m=mod: [m.qp_solve(*qp) for qp in qps]),
            ("segment_sphere_batch",
             lambda m=mod: m.segment_sphere_batch(p0, p1, centers, radii)),
        ):
            call()  # warm up
            samples = []
            for _ in range(iters):
                t0 = time.perf_counter()
                call()
                samples.append(time.perf_counter() - t0)
            med = float(np.median(samples)) * 1e6
            base.setdefault(kernel, med)
            rows.append({
                "kernel": kernel,
                "backend": mod.BACKEND,
                "median_us": med,
                "speedup": base[kernel] / med,
                "active": mod.BACKEND == active,
            })
    return rows


if __name__ == "__main__":
    main()
