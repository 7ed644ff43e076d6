import numpy as np
import pytest

from fracobs.grid import (
    Field,
    GridSpec,
    build_grid,
    gradient,
    interpolate,
    sample_field,
    write_field_csv,
)
from fracobs.weights import WeightParams


def make_grid(a=0.0, nx=9, ny=5, rx=1.0, ry=1.0):
    return build_grid(GridSpec(rx=rx, ry=ry, nx=nx, ny=ny, params=WeightParams(a=a)))


def test_spacing():
    g = make_grid()
    assert g.hx == pytest.approx(0.25)
    assert g.hy == pytest.approx(0.25)
    assert g.xs[g.spec.nx // 2] == 0.0
    assert g.ys[0] == 0.0


def test_even_nx_rejected():
    with pytest.raises(ValueError):
        GridSpec(rx=1.0, ry=1.0, nx=10, ny=5, params=WeightParams(a=0.0))


def test_too_small_rejected():
    with pytest.raises(ValueError):
        GridSpec(rx=1.0, ry=1.0, nx=7, ny=5, params=WeightParams(a=0.0))
    with pytest.raises(ValueError):
        GridSpec(rx=1.0, ry=1.0, nx=9, ny=4, params=WeightParams(a=0.0))


def test_unit_weight_rows_for_a_zero():
    g = make_grid(a=0.0)
    assert np.allclose(g.w_row[1:], 1.0)
    assert np.allclose(g.w_half, 1.0)


def test_first_row_weight_is_half_cell_average():
    g = make_grid(a=0.5)
    # (1/h) int_0^h t^a dt with h = hy/2
    h = g.hy / 2.0
    assert g.w_row[0] == pytest.approx(h**0.5 / 1.5, rel=1e-12)


def test_sample_constant_and_coordinates():
    g = make_grid()
    ones = sample_field(lambda x, y: np.ones_like(x), g)
    assert np.all(ones.values == 1.0)
    fx = sample_field(lambda x, y: x, g)
    assert np.allclose(fx.values, np.broadcast_to(g.xs, fx.values.shape))


def test_sample_conjugate_mode_finite_at_thin_line():
    a = -0.5
    g = make_grid(a=a)
    fld = sample_field(lambda x, y: np.where(y > 0, np.where(y > 0, y, 1.0) ** (1 - a), 0.0), g)
    assert fld.values[0, :] == pytest.approx(0.0)
    assert np.all(np.isfinite(fld.values))


def test_sample_rejects_nonfinite():
    g = make_grid()
    with pytest.raises(ValueError, match="non-finite"):
        sample_field(lambda x, y: np.where(y > 0, 1.0 / np.where(y > 0, y, 1.0), np.inf), g)


def test_interpolate_node_and_affine_exactness():
    g = make_grid(nx=9, ny=5)
    f = sample_field(lambda x, y: 2.0 * x - 3.0 * y + 0.5, g)
    assert interpolate(f, (g.xs[3], g.ys[2])) == pytest.approx(f.values[2, 3])
    assert interpolate(f, (0.1234, 0.4321)) == pytest.approx(2 * 0.1234 - 3 * 0.4321 + 0.5)


def test_interpolate_bilinear_exact_on_xy():
    g = make_grid()
    f = sample_field(lambda x, y: x * y, g)
    assert interpolate(f, (0.3, 0.6)) == pytest.approx(0.18, rel=1e-12)
    # cell center of f = x is the mean of the corner x-values
    fx = sample_field(lambda x, y: x, g)
    assert interpolate(fx, (g.xs[2] + g.hx / 2, g.ys[1] + g.hy / 2)) == pytest.approx(
        g.xs[2] + g.hx / 2
    )


def test_interpolate_reflects_y():
    g = make_grid()
    f = sample_field(lambda x, y: x + y**2, g)
    assert interpolate(f, (0.3, -0.4)) == pytest.approx(interpolate(f, (0.3, 0.4)))


def test_interpolate_rejects_outside():
    g = make_grid()
    f = sample_field(lambda x, y: x, g)
    with pytest.raises(ValueError, match="outside"):
        interpolate(f, (1.5, 0.0))


def test_gradient_exactness():
    g = make_grid(nx=17, ny=9)
    const = sample_field(lambda x, y: np.full_like(x, 3.3), g)
    gx, gy = gradient(const)
    assert np.allclose(gx.values, 0.0) and np.allclose(gy.values, 0.0)
    lin = sample_field(lambda x, y: 3.0 * x, g)
    gx, _ = gradient(lin)
    assert np.allclose(gx.values, 3.0)
    quad = sample_field(lambda x, y: x**2, g)
    gx, _ = gradient(quad)
    assert np.allclose(gx.values[:, 1:-1], 2.0 * g.xs[1:-1])


def test_gradient_even_field_has_zero_y_derivative_on_thin_row():
    g = make_grid(nx=17, ny=9)
    f = sample_field(lambda x, y: np.cos(x) * np.cosh(y), g)
    _, gy = gradient(f)
    assert np.all(gy.values[0, :] == 0.0)


def test_refinement_nests_nodes():
    g1 = make_grid(nx=9, ny=5)
    g2 = make_grid(nx=17, ny=9)
    assert np.allclose(g2.xs[::2], g1.xs)
    assert np.allclose(g2.ys[::2], g1.ys)


def test_field_shape_and_finiteness_enforced():
    g = make_grid()
    with pytest.raises(ValueError):
        Field(g.spec, np.zeros((3, 3)))
    bad = np.zeros((g.spec.ny, g.spec.nx))
    bad[2, 4] = np.nan
    with pytest.raises(ValueError):
        Field(g.spec, bad)


def test_field_csv_dialect(tmp_path):
    g = make_grid()
    f = sample_field(lambda x, y: x + y, g)
    path = tmp_path / "field.csv"
    write_field_csv(f, path)
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().strip().split("\n")
    assert lines[0] == "x,y,value"
    assert len(lines) == 1 + g.spec.nx * g.spec.ny
    x0, y0, v0 = lines[1].split(",")
    assert float(x0) == -1.0 and float(y0) == 0.0 and float(v0) == -1.0
    # x varies fastest
    x1 = float(lines[2].split(",")[0])
    assert x1 == pytest.approx(-1.0 + g.hx)
