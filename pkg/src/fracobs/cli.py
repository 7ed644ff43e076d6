"""Batch front-end: `fracobs run <config>`, `fracobs verify`, `fracobs sweep`.

Exit codes: 0 success, 2 config error, 3 solver non-convergence, 4 check
failure.  The output directory comes from the config and can be overridden
with the FRACOBS_OUTDIR environment variable.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .battery import format_battery, run_battery
from .blowup import BlowupResult, fit_homogeneity, profile_distance, reference_grid, rescale
from .figures import blowup_figure, frequency_figure, residual_figure, solution_figure
from .freeboundary import (
    FreeBoundaryReport,
    PointClass,
    classify_point,
    contact_set,
    default_radii,
    monotone_cone_check,
    nondegeneracy_fit,
    outward_directions,
    pointwise_decay_fit,
)
from .frequency import phi, radial_scan
from .grid import GridSpec, build_grid, sphere_integral, write_field_csv
from .operator import ReferenceKind, make_reference
from .solver import (
    ObstacleProblem,
    complementarity_report,
    free_boundary_nodes,
    solve_obstacle,
    to_tilde,
)
from .weights import WeightParams

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_CHECKS = 4

_SAFE_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "cosh": np.cosh, "sinh": np.sinh,
    "tanh": np.tanh, "pi": math.pi, "e": math.e,
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    a: float
    n: int
    rx: float
    ry: float
    nx: int
    ny: int
    obstacle_kind: str
    obstacle_payload: str
    obstacle_d2: str | None
    dirichlet_kind: str
    dirichlet_payload: str | None
    omega: float
    tol: float
    max_iter: int | None
    radii_count: int
    r_max_cap: float | None
    c0_policy: str | float
    points: str | list[float]
    blowup_radii: list[float]
    class_tol: float | None
    outdir: Path
    figures: bool
    source: Path | None = None


def _eval_expr(expr: str, x: np.ndarray, what: str) -> np.ndarray:
    try:
        vals = eval(expr, {"__builtins__": {}}, dict(_SAFE_FUNCS, x=x))
    except Exception as exc:
        raise ConfigError(f"cannot evaluate {what} expression {expr!r}: {exc}") from exc
    arr = np.broadcast_to(np.asarray(vals, dtype=float), x.shape).copy()
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{what} expression {expr!r} produced non-finite values")
    return arr


_REQUIRED = object()


def _get(cp: configparser.ConfigParser, section: str, key: str, cast, default=_REQUIRED):
    if not cp.has_option(section, key):
        if default is _REQUIRED:
            raise ConfigError(f"missing [{section}] {key}")
        return default
    raw = cp.get(section, key)
    try:
        return cast(raw)
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r} ({exc})") from exc


def parse_config(path: Path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    a = _get(cp, "params", "a", float, _REQUIRED)
    n = _get(cp, "params", "n", int, 1)
    try:
        WeightParams(a=a, n=n).require_1d()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    rx = _get(cp, "grid", "rx", float, 1.0)
    ry = _get(cp, "grid", "ry", float, 1.0)
    nx = _get(cp, "grid", "nx", int, 129)
    ny = _get(cp, "grid", "ny", int, 65)
    try:
        GridSpec(rx=rx, ry=ry, nx=nx, ny=ny, params=WeightParams(a=a, n=n))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    ob_kind = _get(cp, "obstacle", "kind", str, "expression").strip()
    if ob_kind not in ("expression", "csv"):
        raise ConfigError(f"obstacle kind must be expression|csv, got {ob_kind!r}")
    if ob_kind == "expression":
        payload = _get(cp, "obstacle", "expr", str, _REQUIRED)
        d2 = _get(cp, "obstacle", "d2", str, None)
    else:
        payload = _get(cp, "obstacle", "path", str, _REQUIRED)
        d2 = None
        if not Path(payload).exists():
            raise ConfigError(f"obstacle csv not found: {payload}")

    di_kind = _get(cp, "dirichlet", "kind", str, "zero").strip()
    if di_kind not in ("zero", "profile-trace", "csv"):
        raise ConfigError(f"dirichlet kind must be zero|profile-trace|csv, got {di_kind!r}")
    di_payload = None
    if di_kind == "csv":
        di_payload = _get(cp, "dirichlet", "path", str, _REQUIRED)
        if not Path(di_payload).exists():
            raise ConfigError(f"dirichlet csv not found: {di_payload}")

    omega = _get(cp, "solver", "omega", float, 1.5)
    tol = _get(cp, "solver", "tol", float, 1e-8)
    max_iter_raw = _get(cp, "solver", "max_iter", str, "auto").strip()
    max_iter = None if max_iter_raw == "auto" else int(max_iter_raw)
    if not 0.0 < omega < 2.0:
        raise ConfigError(f"solver omega must lie in (0, 2), got {omega}")

    count = _get(cp, "analysis", "count", int, 24)
    cap_raw = _get(cp, "analysis", "r_max_cap", str, "auto").strip()
    r_max_cap = None if cap_raw == "auto" else float(cap_raw)
    c0_raw = _get(cp, "analysis", "c0", str, "calibrate").strip()
    c0_policy: str | float = "calibrate" if c0_raw == "calibrate" else float(c0_raw)
    pts_raw = _get(cp, "analysis", "points", str, "all-fb").strip()
    points: str | list[float] = "all-fb" if pts_raw == "all-fb" else [
        float(tok) for tok in pts_raw.split(",") if tok.strip()
    ]
    blowup_raw = _get(cp, "analysis", "blowup_radii", str, "0.2,0.1,0.05")
    blowup_radii = [float(tok) for tok in blowup_raw.split(",") if tok.strip()]
    ct_raw = _get(cp, "analysis", "class_tol", str, "auto").strip()
    class_tol = None if ct_raw == "auto" else float(ct_raw)
    if class_tol is not None and not class_tol < (1.0 + a) / 2.0:
        raise ConfigError(f"class_tol must be below (1+a)/2 = {(1 + a) / 2}")

    outdir = Path(os.environ.get("FRACOBS_OUTDIR") or _get(cp, "output", "dir", str, "fracobs_out"))
    figures = _get(cp, "output", "figures", str, "on").strip().lower() in ("on", "true", "1", "yes")

    return RunConfig(
        a=a, n=n, rx=rx, ry=ry, nx=nx, ny=ny,
        obstacle_kind=ob_kind, obstacle_payload=payload, obstacle_d2=d2,
        dirichlet_kind=di_kind, dirichlet_payload=di_payload,
        omega=omega, tol=tol, max_iter=max_iter,
        radii_count=count, r_max_cap=r_max_cap, c0_policy=c0_policy,
        points=points, blowup_radii=blowup_radii, class_tol=class_tol,
        outdir=outdir, figures=figures, source=path,
    )


def _read_obstacle_csv(path: str, xs: np.ndarray) -> np.ndarray:
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.dtype.names is None or "x" not in data.dtype.names or "phi" not in data.dtype.names:
        raise ConfigError(f"obstacle csv {path} needs header x,phi")
    xd, pd = np.asarray(data["x"], float), np.asarray(data["phi"], float)
    order = np.argsort(xd)
    xd, pd = xd[order], pd[order]
    if xd[0] > xs[0] or xd[-1] < xs[-1]:
        raise ConfigError(f"obstacle csv {path} does not cover [{xs[0]}, {xs[-1]}]")
    return np.interp(xs, xd, pd)


def _read_field_csv(path: str, spec: GridSpec) -> np.ndarray:
    data = np.genfromtxt(path, delimiter=",", names=True)
    need = ("x", "y", "value")
    if data.dtype.names is None or any(k not in data.dtype.names for k in need):
        raise ConfigError(f"field csv {path} needs header x,y,value")
    if data.size != spec.nx * spec.ny:
        raise ConfigError(
            f"field csv {path} has {data.size} rows, grid wants {spec.nx * spec.ny}"
        )
    vals = np.asarray(data["value"], float).reshape(spec.ny, spec.nx)
    return vals


def build_problem(config: RunConfig) -> ObstacleProblem:
    params = WeightParams(a=config.a, n=config.n)
    grid = build_grid(GridSpec(config.rx, config.ry, config.nx, config.ny, params))
    xs = grid.xs
    if config.obstacle_kind == "expression":
        phi_vals = _eval_expr(config.obstacle_payload, xs, "obstacle")
        d2 = _eval_expr(config.obstacle_d2, xs, "obstacle d2") if config.obstacle_d2 else None
    else:
        phi_vals = _read_obstacle_csv(config.obstacle_payload, xs)
        d2 = None
    if config.dirichlet_kind == "zero":
        diri = np.zeros((config.ny, config.nx))
    elif config.dirichlet_kind == "profile-trace":
        prof = make_reference(ReferenceKind.GLOBAL_PROFILE, params)
        X, Y = np.meshgrid(grid.xs, grid.ys)
        diri = np.asarray(prof(X, Y), dtype=float)
    else:
        diri = _read_field_csv(config.dirichlet_payload, grid.spec)
    try:
        return ObstacleProblem(grid=grid, phi=phi_vals, dirichlet=diri, phi_d2=d2)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, float) and math.isnan(obj):
        return None
    return obj


def _analyze_point(solution, problem, node_index, config) -> dict:
    tilde = to_tilde(solution, problem, node_index)
    r_min, r_max = default_radii(tilde, config.r_max_cap)
    profile = radial_scan(tilde.field, tilde.center_x, r_min, r_max, config.radii_count)
    record = classify_point(
        tilde, c0_policy=config.c0_policy, class_tol=config.class_tol, profile=profile
    )
    series = phi(profile, record.c0)
    row: dict = {
        "x": tilde.center_x,
        "node": int(node_index),
        "phi0": record.phi0,
        "phi_at_rmin": float(series.values[0]),
        "phi0_stable": record.stable,
        "class": record.klass.value,
        "class_tol": record.class_tol,
        "c0": record.c0,
        "worst_dip": record.worst_dip,
        "monotone_passed": record.monotone_passed,
        "monotone_tol": 1e-2,
        "scan_window": [r_min, r_max],
        "tilde_residual_bound": tilde.residual_bound,
        "radii": profile.radii,
        "F": profile.F,
        "D": profile.D,
        "G": profile.G,
        "H": profile.H,
        "d_r": profile.d_r,
        "phi_values": series.values,
        "f_branch": series.f_branch.astype(int),
        "comparison_exponent": problem.grid.params.n + problem.grid.params.a + 4.0,
    }
    try:
        slope, window = pointwise_decay_fit(tilde)
        row["decay_exponent"] = slope
        row["decay_window"] = list(window)
    except ValueError as exc:
        row["decay_exponent"] = None
        row["decay_error"] = str(exc)
    taus = outward_directions(tilde, solution)
    row["outward_directions"] = taus
    if taus and record.klass is PointClass.REGULAR:
        try:
            expo, min_val, window = nondegeneracy_fit(tilde, taus[0])
            row["nondeg_exponent"] = expo
            row["nondeg_min_value"] = min_val
            row["nondeg_window"] = list(window)
        except ValueError as exc:
            row["nondeg_exponent"] = None
            row["nondeg_error"] = str(exc)
        cone_min, cone_ok = monotone_cone_check(tilde, taus)
        row["cone_min_derivative"] = cone_min
        row["cone_passed"] = cone_ok
        row["cone_tol"] = 1e-6
    try:
        k_phi, k_slope = fit_homogeneity(profile, series)
    except ValueError:
        k_phi = k_slope = None
    row["k_from_phi"] = k_phi
    row["k_from_slope"] = k_slope
    blowups = []
    ref = reference_grid(problem.grid.params)
    spec = problem.grid.spec
    for r_req in config.blowup_radii:
        if tilde.center_x - r_req < -spec.rx or tilde.center_x + r_req > spec.rx or r_req > spec.ry:
            continue
        d_req = sphere_integral(tilde.field, tilde.center_x, r_req, power=2)
        d_req = math.sqrt(r_req ** (-(1.0 + problem.grid.params.a)) * d_req)
        if d_req <= 0.0:
            continue
        resc = rescale(tilde.field, tilde.center_x, r_req, d_req, ref)
        dist, orient = profile_distance(resc, problem.grid.params)
        result = BlowupResult(
            r=r_req, rescaled=resc,
            k_from_phi=math.nan if k_phi is None else k_phi,
            k_from_slope=math.nan if k_slope is None else k_slope,
            profile_distance=dist, orientation=orient,
        )
        blowups.append(
            {"r": result.r, "d_r": d_req, "distance": result.profile_distance,
             "orientation": result.orientation, "k_from_phi": k_phi,
             "k_from_slope": k_slope}
        )
    row["blowups"] = blowups
    return row


def run(config: RunConfig) -> int:
    outdir = config.outdir
    outdir.mkdir(parents=True, exist_ok=True)
    problem = build_problem(config)
    solution = solve_obstacle(
        problem, omega=config.omega, max_iter=config.max_iter, tol=config.tol
    )
    write_field_csv(solution.u, outdir / "solution.csv")
    report: dict = {
        "config": {
            "a": config.a, "n": config.n,
            "grid": {"rx": config.rx, "ry": config.ry, "nx": config.nx, "ny": config.ny},
            "obstacle": {"kind": config.obstacle_kind, "payload": config.obstacle_payload},
            "dirichlet": {"kind": config.dirichlet_kind},
            "solver": {"omega": config.omega, "tol": config.tol},
        },
        "solver": {
            "iterations": solution.iterations,
            "converged": solution.converged,
            "residual": solution.residual,
            "residual_trace": solution.residual_trace,
            "final_energy": solution.energy_trace[-1],
            "sweep_ordering": solution.sweep_ordering,
            "feas_tol": solution.feas_tol,
        },
    }
    if not solution.converged:
        report["failures"] = ["solver did not converge"]
        _write_report(report, outdir)
        print(f"solver did not converge in {solution.iterations} sweeps", file=sys.stderr)
        return EXIT_NONCONVERGED

    comp = complementarity_report(solution, problem)
    report["complementarity"] = {
        "max_feasibility_violation": comp.max_feasibility_violation,
        "min_boundary_flux": comp.min_boundary_flux,
        "max_complementarity": comp.max_complementarity,
        "contact_count": comp.contact_count,
        "feas_tol": comp.feas_tol,
        "flux_tol": comp.flux_tol,
        "comp_tol": comp.comp_tol,
        "passed": comp.passed,
    }
    nodes, fb_points = contact_set(solution, problem)
    xs = problem.grid.xs
    report["contact"] = {
        "nodes": nodes,
        "interval": [float(xs[nodes[0]]), float(xs[nodes[-1]])] if nodes.size else None,
        "fb_points": fb_points,
    }
    fb_nodes = free_boundary_nodes(solution)
    if config.points != "all-fb":
        wanted = []
        for x_req in config.points:
            if not fb_nodes:
                break
            wanted.append(min(fb_nodes, key=lambda i: abs(xs[i] - x_req)))
        fb_nodes = sorted(set(wanted))
    failures: list[str] = []
    if not comp.passed:
        failures.append("complementarity residuals exceed tolerances")
    point_rows = []
    for node_index in fb_nodes:
        try:
            row = _analyze_point(solution, problem, node_index, config)
        except ValueError as exc:
            failures.append(f"analysis failed at node {node_index}: {exc}")
            continue
        point_rows.append(row)
        tag = f"x{row['x']:+.6f}"
        _write_frequency_csv(row, outdir / f"frequency_{tag}.csv")
        if not row["monotone_passed"]:
            failures.append(f"frequency not monotone at {tag} (dip {row['worst_dip']:.2e})")
        if not row["phi0_stable"]:
            failures.append(f"Phi(0+) unstable at {tag}")
        if row.get("cone_passed") is False:
            failures.append(f"outward directional derivative dips negative at {tag}")
    fb_report = FreeBoundaryReport(
        contact_nodes=tuple(int(i) for i in nodes),
        fb_points=tuple(fb_points),
        points=tuple(point_rows),
    )
    report["points"] = list(fb_report.points)
    report["failures"] = failures
    report["checks_passed"] = not failures
    _write_report(report, outdir)
    if config.figures:
        figdir = outdir / "figures"
        figdir.mkdir(exist_ok=True)
        solution_figure(problem, solution, figdir / "solution.png")
        residual_figure(solution, figdir / "solver_residuals.png")
        if point_rows:
            frequency_figure(point_rows, figdir / "frequency.png")
            blowup_figure(point_rows, figdir / "blowup.png")
    if failures:
        for f in failures:
            print(f"check failed: {f}", file=sys.stderr)
        return EXIT_CHECKS
    return EXIT_OK


def _write_frequency_csv(row: dict, path: Path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("r,F,D,G,H,d_r,phi,branch\n")
        for k in range(len(row["radii"])):
            fh.write(
                f"{row['radii'][k]:.12g},{row['F'][k]:.12g},{row['D'][k]:.12g},"
                f"{row['G'][k]:.12g},{row['H'][k]:.12g},{row['d_r'][k]:.12g},"
                f"{row['phi_values'][k]:.12g},{int(row['f_branch'][k])}\n"
            )


def _write_report(report: dict, outdir: Path) -> None:
    payload = json.dumps(_json_ready(report), sort_keys=True, indent=2)
    (outdir / "report.json").write_text(payload + "\n")


def default_config_path() -> Path:
    return Path(str(resources.files("fracobs").joinpath("data/default.cfg")))


def _resolve_config(arg: str) -> Path:
    if arg == "default":
        return default_config_path()
    return Path(arg)


def sweep(a_values: list[float], config_path: Path, outdir_root: Path | None) -> int:
    root = outdir_root or parse_config(config_path).outdir
    worst = EXIT_OK
    merged = []
    for a in a_values:
        cfg = parse_config(config_path)
        try:
            WeightParams(a=a)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        cfg.a = a
        cfg.outdir = root / f"a_{a:+.3f}"
        code = run(cfg)
        worst = max(worst, code)
        sub = json.loads((cfg.outdir / "report.json").read_text())
        merged.append({"a": a, "exit_code": code, "report": sub})
    payload = json.dumps(_json_ready({"sweep": merged}), sort_keys=True, indent=2)
    root.mkdir(parents=True, exist_ok=True)
    (root / "sweep.json").write_text(payload + "\n")
    return worst


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracobs",
        description="Thin obstacle problem laboratory for the weighted operator div(|y|^a grad u).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="solve and analyze one configuration")
    p_run.add_argument("config", help="path to a config file, or 'default'")
    sub.add_parser("verify", help="run the fixed verification battery")
    p_sweep = sub.add_parser("sweep", help="re-run a config across weight exponents")
    p_sweep.add_argument("--a", required=True, help="comma-separated list of exponents")
    p_sweep.add_argument("config", help="path to a config file, or 'default'")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            return run(parse_config(_resolve_config(args.config)))
        if args.command == "verify":
            rows = run_battery()
            print(format_battery(rows))
            return EXIT_OK if all(r.passed for r in rows) else EXIT_CHECKS
        if args.command == "sweep":
            try:
                a_values = [float(tok) for tok in args.a.split(",") if tok.strip()]
            except ValueError as exc:
                raise ConfigError(f"bad --a list {args.a!r}: {exc}") from exc
            if not a_values:
                raise ConfigError("--a list is empty")
            return sweep(a_values, _resolve_config(args.config), None)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
