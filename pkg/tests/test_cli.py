import json
import textwrap

import numpy as np

from fracobs.cli import (
    EXIT_CHECKS,
    EXIT_CONFIG,
    EXIT_NONCONVERGED,
    EXIT_OK,
    default_config_path,
    main,
    parse_config,
)

SMALL_CFG = textwrap.dedent(
    """
    [params]
    a = 0.0

    [grid]
    nx = 65
    ny = 33

    [obstacle]
    kind = expression
    expr = 0.5 - 2*x**2
    d2 = -4.0 + 0*x

    [dirichlet]
    kind = zero

    [solver]
    omega = 1.7
    tol = 1e-8

    [analysis]
    count = 16
    blowup_radii = 0.2,0.1

    [output]
    dir = {outdir}
    figures = {figures}
    """
)


def write_cfg(tmp_path, name="run.cfg", body=None, **kw):
    kw.setdefault("outdir", tmp_path / "out")
    kw.setdefault("figures", "off")
    text = (body or SMALL_CFG).format(**kw)
    path = tmp_path / name
    path.write_text(text)
    return path


def test_default_config_parses():
    cfg = parse_config(default_config_path())
    assert cfg.a == 0.0 and cfg.nx == 129 and cfg.ny == 65
    assert cfg.obstacle_kind == "expression"
    assert cfg.c0_policy == "calibrate"
    assert cfg.points == "all-fb"


def test_out_of_range_exponent_is_config_error(tmp_path):
    path = write_cfg(tmp_path, body=SMALL_CFG.replace("a = 0.0", "a = 1.5"))
    assert main(["run", str(path)]) == EXIT_CONFIG


def test_missing_key_is_config_error(tmp_path):
    path = write_cfg(tmp_path, body=SMALL_CFG.replace("expr = 0.5 - 2*x**2", ""))
    assert main(["run", str(path)]) == EXIT_CONFIG


def test_malformed_expression_is_config_error(tmp_path):
    path = write_cfg(tmp_path, body=SMALL_CFG.replace("0.5 - 2*x**2", "__import__('os')"))
    assert main(["run", str(path)]) == EXIT_CONFIG


def test_run_small_config_products(tmp_path):
    path = write_cfg(tmp_path)
    assert main(["run", str(path)]) == EXIT_OK
    out = tmp_path / "out"
    assert (out / "solution.csv").exists()
    assert (out / "report.json").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["solver"]["converged"]
    assert report["complementarity"]["passed"]
    assert len(report["contact"]["fb_points"]) == 2
    freq = sorted(out.glob("frequency_*.csv"))
    assert len(freq) == 2
    header = freq[0].read_text().splitlines()[0]
    assert header == "r,F,D,G,H,d_r,phi,branch"
    assert not (out / "figures").exists()  # figures off


def test_report_is_deterministic(tmp_path):
    p1 = write_cfg(tmp_path, name="a.cfg", outdir=tmp_path / "o1")
    p2 = write_cfg(tmp_path, name="b.cfg", outdir=tmp_path / "o2")
    assert main(["run", str(p1)]) == EXIT_OK
    assert main(["run", str(p2)]) == EXIT_OK
    b1 = (tmp_path / "o1" / "report.json").read_bytes()
    b2 = (tmp_path / "o2" / "report.json").read_bytes()
    assert b1 == b2


def test_nonconvergence_exit_code_and_partial_dump(tmp_path):
    body = SMALL_CFG.replace("tol = 1e-8", "tol = 1e-8\nmax_iter = 1")
    path = write_cfg(tmp_path, body=body)
    assert main(["run", str(path)]) == EXIT_NONCONVERGED
    out = tmp_path / "out"
    assert (out / "solution.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["solver"]["converged"] is False


def test_outdir_env_override(tmp_path, monkeypatch):
    path = write_cfg(tmp_path)
    override = tmp_path / "env_out"
    monkeypatch.setenv("FRACOBS_OUTDIR", str(override))
    assert main(["run", str(path)]) == EXIT_OK
    assert (override / "report.json").exists()


def test_figures_rendered_when_enabled(tmp_path):
    path = write_cfg(tmp_path, figures="on")
    assert main(["run", str(path)]) == EXIT_OK
    figdir = tmp_path / "out" / "figures"
    names = {p.name for p in figdir.glob("*.png")}
    assert {"solution.png", "solver_residuals.png", "frequency.png", "blowup.png"} <= names


def test_obstacle_csv_kind(tmp_path):
    xs = np.linspace(-1.0, 1.0, 201)
    csv = tmp_path / "obstacle.csv"
    csv.write_text("x,phi\n" + "\n".join(f"{x},{0.5 - 2*x*x}" for x in xs) + "\n")
    body = SMALL_CFG.replace("kind = expression", "kind = csv").replace(
        "expr = 0.5 - 2*x**2", f"path = {csv}"
    ).replace("d2 = -4.0 + 0*x", "")
    path = write_cfg(tmp_path, body=body)
    assert main(["run", str(path)]) == EXIT_OK


def test_dirichlet_csv_kind(tmp_path):
    from fracobs.grid import GridSpec, build_grid, sample_field, write_field_csv
    from fracobs.weights import WeightParams

    grid = build_grid(GridSpec(1.0, 1.0, 65, 33, WeightParams(a=0.0)))
    fld = sample_field(lambda x, y: 0.1 * (x**2 + y**2), grid)
    csv = tmp_path / "dirichlet.csv"
    write_field_csv(fld, csv)
    body = SMALL_CFG.replace("kind = zero", f"kind = csv\npath = {csv}")
    path = write_cfg(tmp_path, body=body)
    code = main(["run", str(path)])
    assert code in (EXIT_OK, EXIT_CHECKS)
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["solver"]["converged"]


def test_sweep_merges_reports(tmp_path):
    path = write_cfg(tmp_path)
    assert main(["sweep", "--a=-0.5,0.5", str(path)]) == EXIT_OK
    root = tmp_path / "out"
    merged = json.loads((root / "sweep.json").read_text())
    assert [entry["a"] for entry in merged["sweep"]] == [-0.5, 0.5]
    assert (root / "a_-0.500" / "report.json").exists()
    assert (root / "a_+0.500" / "report.json").exists()


def test_run_default_bundled_config(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACOBS_OUTDIR", str(tmp_path / "out"))
    assert main(["run", "default"]) == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    points = report["points"]
    assert len(points) == 2
    for p in points:
        assert p["class"] == "Regular"
        assert abs(p["phi0"] - 4.0) < 0.25
        assert p["monotone_passed"]
    assert report["checks_passed"]


def test_verify_battery_all_pass(battery_rows, capsys):
    from fracobs.battery import format_battery

    table = format_battery(battery_rows)
    assert "FAIL" not in table
    assert all(r.passed for r in battery_rows)


def test_verify_cli_exit_zero(capsys):
    code = main(["verify"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "checks" in out and "failed" in out
    assert " FAIL" not in out
