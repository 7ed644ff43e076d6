"""Uniform half-strip grid, scalar fields and grid quadrature.

The domain is [-rx, rx] x [0, ry]; the stored values represent the even
extension u(x, -y) = u(x, y), so integrals over full balls double the y > 0
contribution.  Row j = 0 lies exactly on the thin line {y = 0}.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .weights import WeightParams, circle_rule, edge_weight

__all__ = [
    "GridSpec",
    "Grid",
    "Field",
    "build_grid",
    "sample_field",
    "interpolate",
    "interpolate_many",
    "gradient",
    "write_field_csv",
    "sphere_integral",
    "ball_integral",
]


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the tensor grid: half-width rx, height ry, node counts."""

    rx: float
    ry: float
    nx: int
    ny: int
    params: WeightParams

    def __post_init__(self) -> None:
        if self.rx <= 0.0 or self.ry <= 0.0:
            raise ValueError("grid extents must be positive")
        if self.nx < 9 or self.nx % 2 == 0:
            raise ValueError(f"nx must be odd and >= 9, got {self.nx}")
        if self.ny < 5:
            raise ValueError(f"ny must be >= 5, got {self.ny}")
        self.params.require_1d()

    @property
    def hx(self) -> float:
        return 2.0 * self.rx / (self.nx - 1)

    @property
    def hy(self) -> float:
        return self.ry / (self.ny - 1)

    def xs(self) -> np.ndarray:
        return -self.rx + self.hx * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.hy * np.arange(self.ny)


class Grid:
    """GridSpec plus precomputed weight tables for the finite-volume operator.

    w_row[j]   : |y_j|^a used on x-edges of row j; at j = 0 the half-cell
                 average edge_weight(0, hy/2, a) replaces the (infinite or
                 vanishing) point value.
    w_half[j]  : average of |t|^a over [y_j, y_{j+1}], used on y-edges.
    cell_yint[j]: exact integral of |t|^a over [y_j, y_{j+1}] (= w_half * hy),
                 used by cell-sum ball integrals.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        a = spec.params.a
        hy = spec.hy
        ys = spec.ys()
        w_row = np.where(ys > 0, np.where(ys > 0, ys, 1.0) ** a, 0.0)
        w_row[0] = edge_weight(0.0, hy / 2.0, a)
        self.w_row = w_row
        self.w_half = np.array(
            [edge_weight(ys[j], ys[j + 1], a) for j in range(spec.ny - 1)]
        )
        self.cell_yint = self.w_half * hy
        self.xs = spec.xs()
        self.ys = ys

    @property
    def hx(self) -> float:
        return self.spec.hx

    @property
    def hy(self) -> float:
        return self.spec.hy

    @property
    def params(self) -> WeightParams:
        return self.spec.params


def build_grid(spec: GridSpec) -> Grid:
    """Construct the grid with its precomputed edge weights."""
    return Grid(spec)


@dataclass(frozen=True)
class Field:
    """Scalar samples on a grid, stored as values[j, i] (row j = height y_j).

    Semantically represents the even-in-y extension; only y >= 0 is stored.
    """

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (self.spec.ny, self.spec.nx):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.spec.ny}, {self.spec.nx})"
            )
        if not np.all(np.isfinite(self.values)):
            j, i = np.argwhere(~np.isfinite(self.values))[0]
            raise ValueError(
                f"non-finite value at node (x={self.spec.xs()[i]}, y={self.spec.ys()[j]})"
            )
        self.values.setflags(write=False)


def sample_field(f, grid: Grid) -> Field:
    """Evaluate f(x, y) at every node.  f may be vectorised or scalar."""
    X, Y = np.meshgrid(grid.xs, grid.ys)
    try:
        vals = np.asarray(f(X, Y), dtype=float)
        if vals.shape != X.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.vectorize(lambda x, y: float(f(x, y)))(X, Y)
    if not np.all(np.isfinite(vals)):
        j, i = np.argwhere(~np.isfinite(vals))[0]
        raise ValueError(f"sampled non-finite value at (x={X[j, i]}, y={Y[j, i]})")
    return Field(grid.spec, vals)


def interpolate_many(field: Field, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bilinear interpolation at arrays of points; y is reflected to |y|."""
    spec = field.spec
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    eps = 1e-12 * max(spec.rx, spec.ry)
    bad = (x < -spec.rx - eps) | (x > spec.rx + eps) | (y > spec.ry + eps)
    if np.any(bad):
        k = int(np.argmax(np.ravel(bad)))
        raise ValueError(
            f"point outside grid: ({np.ravel(x)[k]:.6g}, {np.ravel(y)[k]:.6g})"
        )
    gx = np.clip((x + spec.rx) / spec.hx, 0.0, spec.nx - 1.0)
    gy = np.clip(y / spec.hy, 0.0, spec.ny - 1.0)
    i0 = np.minimum(gx.astype(int), spec.nx - 2)
    j0 = np.minimum(gy.astype(int), spec.ny - 2)
    tx = gx - i0
    ty = gy - j0
    v = field.values
    return (
        v[j0, i0] * (1 - tx) * (1 - ty)
        + v[j0, i0 + 1] * tx * (1 - ty)
        + v[j0 + 1, i0] * (1 - tx) * ty
        + v[j0 + 1, i0 + 1] * tx * ty
    )


def interpolate(field: Field, point: tuple[float, float]) -> float:
    """Bilinear interpolation at a single (x, y) point."""
    return float(interpolate_many(field, np.array([point[0]]), np.array([point[1]]))[0])


def gradient(field: Field) -> tuple[Field, Field]:
    """Discrete gradient: centered in the interior, one-sided second order at
    lateral/top boundaries, and d/dy = 0 on the j = 0 row (even reflection)."""
    spec = field.spec
    u = field.values
    hx, hy = spec.hx, spec.hy
    gx = np.empty_like(u)
    gy = np.empty_like(u)

    gx[:, 1:-1] = (u[:, 2:] - u[:, :-2]) / (2.0 * hx)
    gx[:, 0] = (-3.0 * u[:, 0] + 4.0 * u[:, 1] - u[:, 2]) / (2.0 * hx)
    gx[:, -1] = (3.0 * u[:, -1] - 4.0 * u[:, -2] + u[:, -3]) / (2.0 * hx)

    gy[1:-1, :] = (u[2:, :] - u[:-2, :]) / (2.0 * hy)
    gy[0, :] = 0.0
    gy[-1, :] = (3.0 * u[-1, :] - 4.0 * u[-2, :] + u[-3, :]) / (2.0 * hy)

    return Field(spec, gx), Field(spec, gy)


def write_field_csv(field: Field, path) -> None:
    """Dump the field as CSV rows x,y,value (x fastest), LF line endings."""
    spec = field.spec
    xs, ys = spec.xs(), spec.ys()
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "value"])
        for j in range(spec.ny):
            for i in range(spec.nx):
                writer.writerow(
                    [f"{xs[i]:.12g}", f"{ys[j]:.12g}", f"{field.values[j, i]:.12g}"]
                )


def sphere_integral(
    field: Field, center_x: float, r: float, quad_points: int = 512, power: int = 1
) -> float:
    """int_{S_r} field^power |y|^a dsigma for a sphere centered at (center_x, 0).

    Uses the circle rule of the weights module with bilinearly interpolated
    field values; the full circle is covered through the even extension.
    """
    a = field.spec.params.a
    theta, w = circle_rule(a, quad_points)
    x = center_x + r * np.cos(theta)
    y = r * np.sin(theta)
    vals = interpolate_many(field, x, y)
    if power != 1:
        vals = vals**power
    return float(r ** (1.0 + a) * np.sum(w * vals))


def ball_integral(grid: Grid, density: np.ndarray, center_x: float, r: float) -> float:
    """int_{B_r} density(X) |y|^a dX over the full ball centered at (center_x, 0).

    density is nodal (ny, nx); cells whose centers lie in B_r contribute the
    mean of their corner values times the exact |y|^a cell weight.  The y < 0
    half is accounted for by symmetry (factor 2).
    """
    spec = grid.spec
    xc = 0.5 * (grid.xs[:-1] + grid.xs[1:])
    yc = 0.5 * (grid.ys[:-1] + grid.ys[1:])
    XC, YC = np.meshgrid(xc, yc)
    inside = (XC - center_x) ** 2 + YC**2 < r * r
    cell_mean = 0.25 * (
        density[:-1, :-1] + density[:-1, 1:] + density[1:, :-1] + density[1:, 1:]
    )
    w = grid.cell_yint[:, None] * grid.hx
    return float(2.0 * np.sum(cell_mean * w * inside))
