"""Command-line runner: one binary, one subcommand per stage.

Exit codes: 0 success, 1 a tolerance (criterion) failed, 2 invalid input.
"""

from __future__ import annotations

import csv
import json
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import numpy as np
import scipy
import tomli

from . import __version__, acoustic, pipelines
from .model import ScenarioError, load_scenario

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
SWEEP_AXES = ("a", "d", "h", "s", "mesh")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            cells = [r[h] for h in header] if isinstance(r, dict) else r
            w.writerow([_fmt(c) for c in cells])


def write_manifest(path: Path, payload: dict, started: float) -> None:
    payload = dict(payload)
    payload["versions"] = {"nanopa": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}
    payload["wall_time_s"] = round(time.perf_counter() - started, 3)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_fmt) + "\n", encoding="utf-8")


class InputError(click.ClickException):
    exit_code = EXIT_INPUT


def _guard(func):
    """Map library input errors to exit code 2."""

    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ScenarioError, ValueError, OSError) as exc:
            raise InputError(str(exc)) from None

    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper


scenario_opt = click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Scenario TOML file.")
out_opt = click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")


def _out(out_dir) -> Path:
    p = Path(out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


@click.group()
@click.version_option(__version__)
def main():
    """Photoacoustic imaging with dielectric nanoparticles: simulation and inversion."""


@main.command()
@scenario_opt
@out_opt
@_guard
def resonance(scenario_path, out_dir):
    """Disc resonance table (mode, k, j, lambda_tilde, lambda, mean_sq, omega_n, hypotheses_ok)."""
    sc = load_scenario(scenario_path)
    rows = pipelines.resonance_rows(sc)
    header = ["mode", "k", "j", "lambda_tilde", "lambda", "mean_sq", "omega_n", "hypotheses_ok"]
    write_csv(_out(out_dir) / "resonance.csv", header, rows)


@main.command("forward-em")
@scenario_opt
@out_opt
@_guard
def forward_em(scenario_path, out_dir):
    """Particle fields at cell centroids plus a run manifest."""
    started = time.perf_counter()
    sc = load_scenario(scenario_path)
    spec = pipelines.particle_spectrum(sc)
    sc = pipelines.resolve(sc, spec)
    field = pipelines.solve_fields(sc)
    rows = []
    for m, mesh in enumerate(field.problem.physical_meshes()):
        vals = field.cell_averages(m)
        for (x, y), v in zip(mesh.centroids, vals):
            rows.append([m, x, y, v.real, v.imag, abs(v)])
    out = _out(out_dir)
    write_csv(out / "field.csv", ["particle", "x", "y", "re_u", "im_u", "abs_u"], rows)
    manifest = {"omega": sc.omega, "residual": field.residual, "condition": field.condition}
    if len(sc.particles) > 1:
        manifest["foldy_lax"] = pipelines.foldy_lax_comparison(sc, spec).diagnostics
    write_manifest(out / "manifest.json", manifest, started)


@main.command("forward-pa")
@scenario_opt
@out_opt
@_guard
def forward_pa(scenario_path, out_dir):
    """Pressure traces at the sensors: the phantom if given, else the particles."""
    sc = load_scenario(scenario_path)
    if sc.phantom:
        record = pipelines.phantom_pressure(sc)
    else:
        sc = pipelines.resolve(sc)
        field = pipelines.solve_fields(sc)
        record = pipelines.particle_pressure(sc, field, np.asarray(sc.sensors.points), np.asarray(sc.sensors.times))
    (_out(out_dir) / "pressure.csv").write_text(record.to_csv(), encoding="utf-8")


@main.command("invert-acoustic")
@scenario_opt
@out_opt
@click.option("--record", "record_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Pressure CSV from forward-pa.")
@_guard
def invert_acoustic(scenario_path, out_dir, record_path):
    """Initial pressure reconstruction on a grid over Omega."""
    sc = load_scenario(scenario_path)
    record = acoustic.PressureRecord.from_csv(Path(record_path).read_text(encoding="utf-8"))
    recon = pipelines.invert_acoustic(sc, record)
    rows = [[x, y, recon.values[i, j]] for i, x in enumerate(recon.x) for j, y in enumerate(recon.y)]
    out = _out(out_dir)
    write_csv(out / "reconstruction.csv", ["x", "y", "H"], rows)
    if sc.phantom:
        err = recon.relative_l2_error(pipelines.phantom_map(sc, recon))
        write_csv(out / "summary.csv", ["quantity", "value"], [["l2_error", err]])


def _report(out: Path, result: pipelines.PipelineResult, title: str) -> None:
    rows = list(result.rows())
    write_csv(out / "report.csv", ["quantity", "truth", "recovered", "relative_error"], rows)
    lines = [title]
    for r in rows:
        lines.append(f"{r['quantity']}: recovered {_fmt(r['recovered'])}, truth {_fmt(r['truth'])}, relative error {_fmt(r['relative_error'])}")
    for k in sorted(result.diagnostics):
        lines.append(f"{k} = {_fmt(result.diagnostics[k])}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    click.echo("\n".join(lines))


@main.command("invert-em")
@scenario_opt
@out_opt
@_guard
def invert_em_cmd(scenario_path, out_dir):
    """|u0(z)| from one particle; |k|(z) as well when the scenario holds a dimer."""
    sc = load_scenario(scenario_path)
    _report(_out(out_dir), pipelines.run_pipeline("full-inversion", sc), "electromagnetic inversion")


@main.command()
@scenario_opt
@out_opt
@_guard
def localize(scenario_path, out_dir):
    """Particle position from two sensors at the first two sensor times."""
    sc = load_scenario(scenario_path)
    _report(_out(out_dir), pipelines.localization(sc), "localization")


def parse_sweep(text: str | None):
    if text is None:
        return None, [None]
    axis, sep, values = text.partition("=")
    if not sep or not axis:
        raise InputError(f"--sweep must look like AXIS=v1,v2,...; got {text!r}")
    axis = axis.strip()
    if axis not in SWEEP_AXES:
        raise InputError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    try:
        vals = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"--sweep values must be numbers: {exc}") from None
    return axis, vals


def load_tolerances(path) -> dict:
    if path is None:
        return {}
    data = tomli.loads(Path(path).read_text(encoding="utf-8"))
    tol = data.get("tolerances", data)
    return {str(k): float(v) for k, v in tol.items()}


def _run_point(pipeline, scenario, axis, value):
    try:
        sc = scenario if axis is None else pipelines.apply_sweep(scenario, axis, value)
        return list(pipelines.run_pipeline(pipeline, sc).rows()), None
    except Exception as exc:  # recorded per point, never fatal to the sweep
        return [], f"{type(exc).__name__}: {exc}"


@main.command()
@scenario_opt
@out_opt
@click.option("--sweep", "sweep", default=None, help="AXIS=v1,v2,... with AXIS in a, d, h, s, mesh.")
@click.option("--pipeline", "pipeline", default="full-inversion", type=click.Choice(pipelines.PIPELINES))
@click.option("--tolerance-file", "tolerance_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--threads", default=1, type=click.IntRange(min=1), help="Sweep points run concurrently.")
@_guard
def experiment(scenario_path, out_dir, sweep, pipeline, tolerance_file, threads):
    """Run a pipeline over a sweep; write per-point CSVs, an aggregate CSV and a manifest."""
    started = time.perf_counter()
    sc = load_scenario(scenario_path)
    axis, values = parse_sweep(sweep)
    tolerances = load_tolerances(tolerance_file)
    out = _out(out_dir)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda v: _run_point(pipeline, sc, axis, v), values))
    header = ["point", "axis", "value", "quantity", "truth", "recovered", "relative_error", "status"]
    aggregate, failures = [], []
    for i, (value, (rows, error)) in enumerate(zip(values, results)):
        point_rows = []
        if error is not None:
            point_rows.append({"point": i, "axis": axis or "", "value": "" if value is None else value, "quantity": "", "truth": "", "recovered": "", "relative_error": "", "status": error})
            failures.append(f"point {i}: {error}")
        for r in rows:
            tol = tolerances.get(r["quantity"])
            status = "ok" if tol is None else ("pass" if r["relative_error"] <= tol else "fail")
            if status == "fail":
                failures.append(f"point {i}: {r['quantity']} error {r['relative_error']:.3g} > {tol}")
            point_rows.append({"point": i, "axis": axis or "", "value": "" if value is None else value, **r, "status": status})
        write_csv(out / f"point_{i:03d}.csv", header, point_rows)
        aggregate.extend(point_rows)
    write_csv(out / "aggregate.csv", header, aggregate)
    write_manifest(
        out / "manifest.json",
        {"pipeline": pipeline, "axis": axis, "values": values, "tolerances": tolerances, "failures": failures, "scenario": str(scenario_path)},
        started,
    )
    for f in failures:
        click.echo(f"FAIL {f}", err=True)
    sys.exit(EXIT_FAIL if failures else EXIT_OK)


if __name__ == "__main__":
    main()
