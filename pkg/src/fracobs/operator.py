"""Discrete divergence-form operator L_a, reference solutions and property checks.

The operator is the finite-volume form of div(|y|^a grad u) on the half strip
with even-in-y semantics.  Reference solutions provide closed forms that are
L_a-harmonic (everywhere or away from known sets) and anchor the tests: the
discrete residual must vanish or converge on them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .grid import Field, Grid, ball_integral, gradient, interpolate_many, sample_field
from .weights import WeightParams, circle_rule

__all__ = [
    "ReferenceKind",
    "ReferenceSolution",
    "make_reference",
    "apply_la",
    "LaResult",
    "residual_norms",
    "harnack_ratio",
    "mean_value_gap",
    "poincare_ratio",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


class ReferenceKind(Enum):
    CONSTANT = "constant"
    LINEAR_X = "linear-x"
    CONJUGATE_Y = "conjugate-y"
    QUAD_BALANCE = "quad-balance"
    FUNDAMENTAL = "fundamental"
    PROFILE_DERIVATIVE = "profile-derivative"
    GLOBAL_PROFILE = "global-profile"


def _profile_derivative(x: np.ndarray, y: np.ndarray, s: float) -> np.ndarray:
    """w(x, y) = (sqrt(x^2 + y^2) - x)^s, evaluated cancellation-free."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    pos = x > 0
    out = np.empty_like(r)
    out[pos] = (y[pos] * y[pos] / (r[pos] + x[pos])) ** s
    out[~pos] = (r[~pos] - x[~pos]) ** s
    return out


def _gl_panel(f, lo: float, hi: float) -> float:
    mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return rad * float(np.sum(_GL_W * f(mid + rad * _GL_X)))


def _profile_point(x: float, y: float, s: float) -> float:
    """u0(x, y) for y > 0 by quadrature of w along the line through (x, y).

    d/dx u0 = -w and u0 = 0 on {y = 0, x >= 0}.  The antiderivative of w
    grows like t^{1-s}; that divergent part is removed analytically through
    the tail counterterm y^{2s} (2t)^{-s}, so the limit defining u0 converges.
    """
    t_star = max(2.0 * abs(x), 2.0 * y, 1.0)
    pts = [x]
    if x < 0.0:
        t = -max(y, 1e-3 * abs(x))
        graded = []
        while t > x * (1.0 - 1e-12):
            graded.append(t)
            t *= 4.0
        pts.extend(sorted(g for g in graded if g > x))
        pts.append(0.0)
        t = y
        while t < t_star:
            pts.append(t)
            t *= 4.0
    else:
        t = max(x, y)
        while t < t_star:
            pts.append(t)
            t *= 4.0
    pts.append(t_star)
    knots = np.unique(np.asarray(pts, dtype=float))
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        total += _gl_panel(lambda t: _profile_derivative(t, np.full_like(t, y), s), lo, hi)

    def tail(tau: np.ndarray) -> np.ndarray:
        t = t_star / tau
        w = _profile_derivative(t, np.full_like(t, y), s)
        return (w - y ** (2.0 * s) * (2.0 * t) ** (-s)) * t_star / tau**2

    for lo, hi in ((0.0, 0.25), (0.25, 0.5), (0.5, 1.0)):
        total += _gl_panel(tail, lo, hi)
    total -= 2.0 ** (-s) / (1.0 - s) * y ** (2.0 * s) * t_star ** (1.0 - s)
    return total


@lru_cache(maxsize=8)
def _profile_table(a: float, n_table: int = 2049):
    """Angular profile A(theta) of u0 = rho^{1+s} A(theta), tabulated on [0, pi].

    Computed by the line quadrature on the unit circle.  The contact-ray
    singular part A2 theta^{2s} (A2 = -2^{-s}/(1-s)) is split off so the
    remainder has bounded curvature and splines cleanly.
    """
    s = (1.0 - a) / 2.0
    theta = np.linspace(0.0, np.pi, n_table)
    vals = np.empty(n_table)
    vals[0] = 0.0
    vals[-1] = 2.0**s / (1.0 + s)  # trace value u0(-1, 0)
    for k in range(1, n_table - 1):
        vals[k] = _profile_point(math.cos(theta[k]), math.sin(theta[k]), s)
    a2 = -(2.0 ** (-s)) / (1.0 - s)
    regular = vals - a2 * theta ** (2.0 * s)
    # regular part has zero slope at 0; at pi the full profile has A'(pi) = 0
    rp_pi = -a2 * 2.0 * s * np.pi ** (2.0 * s - 1.0)
    spline = CubicSpline(theta, regular, bc_type=((1, 0.0), (1, rp_pi)))
    return spline, a2


def _profile_eval(x: np.ndarray, y: np.ndarray, a: float) -> np.ndarray:
    """Unnormalised global profile through the cached angular table."""
    s = (1.0 - a) / 2.0
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    rho = np.hypot(x, y)
    theta = np.arctan2(y, x)
    spline, a2 = _profile_table(a)
    ang = spline(theta) + a2 * theta ** (2.0 * s)
    return np.where(rho == 0.0, 0.0, rho ** (1.0 + s) * ang)


@dataclass(frozen=True)
class ReferenceSolution:
    """Pointwise-evaluable reference; x0 shifts the x origin (used to move the
    fundamental solution's pole off the sampled domain)."""

    kind: ReferenceKind
    params: WeightParams
    scale: float = 1.0
    offset: float = 0.0
    x0: float = 0.0
    norm: float = field(init=False, default=1.0)

    def __post_init__(self) -> None:
        if self.kind is ReferenceKind.GLOBAL_PROFILE:
            # normalise so int_{S_1} u0^2 |y|^a dsigma = 1
            theta, w = circle_rule(self.params.a, 2048)
            vals = _profile_eval(np.cos(theta), np.sin(theta), self.params.a)
            object.__setattr__(self, "norm", float(math.sqrt(np.sum(w * vals**2))))

    def __call__(self, x, y) -> np.ndarray:
        a, s = self.params.a, self.params.s
        x = np.asarray(x, dtype=float) - self.x0
        y = np.asarray(y, dtype=float)
        k = self.kind
        if k is ReferenceKind.CONSTANT:
            base = np.ones_like(x)
        elif k is ReferenceKind.LINEAR_X:
            base = x.copy()
        elif k is ReferenceKind.CONJUGATE_Y:
            base = np.sign(y) * np.abs(y) ** (1.0 - a)
        elif k is ReferenceKind.QUAD_BALANCE:
            base = x**2 - y**2 / (1.0 + a)
        elif k is ReferenceKind.FUNDAMENTAL:
            r = np.hypot(x, y)
            expo = -(self.params.n + a - 1.0)
            base = np.where(r > 0, np.where(r > 0, r, 1.0) ** expo, np.inf)
        elif k is ReferenceKind.PROFILE_DERIVATIVE:
            base = _profile_derivative(x, np.abs(y), s)
        elif k is ReferenceKind.GLOBAL_PROFILE:
            base = _profile_eval(x, y, a) / self.norm
        else:  # pragma: no cover
            raise ValueError(f"unknown reference kind {k}")
        return self.scale * base + self.offset

    def sample(self, grid: Grid) -> Field:
        return sample_field(self, grid)


def make_reference(
    kind: ReferenceKind,
    params: WeightParams,
    scale: float = 1.0,
    offset: float = 0.0,
    x0: float = 0.0,
) -> ReferenceSolution:
    """Build a reference solution; GLOBAL_PROFILE triggers its quadrature table."""
    params.require_1d()
    return ReferenceSolution(kind=kind, params=params, scale=scale, offset=offset, x0=x0)


@dataclass(frozen=True)
class LaResult:
    """Interior finite-volume residual (zero on non-interior nodes) and the
    discrete weighted Neumann trace on the j = 0 row."""

    interior: Field
    boundary_flux: np.ndarray
    interior_mask: np.ndarray


def apply_la(fld: Field, grid: Grid) -> LaResult:
    """Finite-volume divergence of |y|^a grad u at interior nodes (j >= 1), and
    the boundary flux  -edge_weight(0, hy, a) (u_{i,1} - u_{i,0}) / hy
    representing -lim_{y->0+} y^a d_y u (nonnegative on the contact set)."""
    spec = fld.spec
    if spec != grid.spec:
        raise ValueError("field and grid have different specs")
    u = fld.values
    hx, hy = grid.hx, grid.hy
    res = np.zeros_like(u)
    wx = grid.w_row[1:-1][:, None]
    wyp = grid.w_half[1:][:, None]
    wym = grid.w_half[:-1][:, None]
    core = u[1:-1, 1:-1]
    res[1:-1, 1:-1] = (
        wx * (u[1:-1, 2:] - 2.0 * core + u[1:-1, :-2]) / hx**2
        + (wyp * (u[2:, 1:-1] - core) - wym * (core - u[:-2, 1:-1])) / hy**2
    )
    mask = np.zeros_like(u, dtype=bool)
    mask[1:-1, 1:-1] = True
    flux = -grid.w_half[0] * (u[1, :] - u[0, :]) / hy
    return LaResult(Field(spec, res), flux, mask)


def residual_norms(result: LaResult, grid: Grid) -> tuple[float, float]:
    """(max |R|, cell-integrated L1 of R) over interior nodes.

    The max norm diverges like h^a near the first row for a < 0 on fields
    with nonzero y-curvature; the integrated norm is the convergent metric
    there.
    """
    r = np.abs(result.interior.values[result.interior_mask])
    return float(np.max(r)), float(np.sum(r) * grid.hx * grid.hy)


def _node_ball_mask(spec, center: tuple[float, float], r: float) -> np.ndarray:
    X, Y = np.meshgrid(spec.xs(), spec.ys())
    return (X - center[0]) ** 2 + (Y - center[1]) ** 2 <= r * r * (1.0 + 1e-12)


def harnack_ratio(fld: Field, center: tuple[float, float], r: float) -> float:
    """sup / inf of the field over grid nodes in B_{r/2}(center).

    Requires positivity on all node values in B_r(center); the even extension
    makes the node set y-symmetric so only y >= 0 is inspected.
    """
    vals = fld.values[_node_ball_mask(fld.spec, center, r)]
    if vals.size == 0:
        raise ValueError("B_r contains no grid nodes")
    if np.any(vals <= 0.0):
        raise ValueError("field is not positive on B_r")
    half = fld.values[_node_ball_mask(fld.spec, center, r / 2.0)]
    if half.size == 0:
        raise ValueError("B_{r/2} contains no grid nodes")
    return float(np.max(half) / np.min(half))


def mean_value_gap(fld: Field, r: float, table, quad_points: int | None = None) -> float:
    """field(0,0) minus its weighted average over S_r (origin-centered sphere).

    Nonnegative up to quadrature error for discrete supersolutions; zero for
    L_a-harmonic fields.  The quadrature defaults to the table's resolution so
    that the weighted average of a constant is exact.
    """
    spec = fld.spec
    if r > min(spec.rx, spec.ry):
        raise ValueError("ball B_r not inside the grid")
    theta, w = circle_rule(spec.params.a, quad_points or table.quad_points)
    vals = interpolate_many(fld, r * np.cos(theta), r * np.sin(theta))
    avg = float(np.sum(w * vals)) / table.omega_n_plus_a
    return float(fld.values[0, spec.nx // 2]) - avg


def poincare_ratio(fld: Field, r: float, table, quad_points: int = 2048):
    """int_{S_r} |v - vbar|^2 |y|^a dsigma / (r int_{B_r} |grad v|^2 |y|^a dX)
    with vbar the weighted sphere average.  None when the energy vanishes."""
    spec = fld.spec
    a = spec.params.a
    grid = Grid(spec)
    theta, w = circle_rule(a, quad_points)
    vals = interpolate_many(fld, r * np.cos(theta), r * np.sin(theta))
    vbar = float(np.sum(w * vals)) / table.omega_n_plus_a
    num = float(r ** (1.0 + a) * np.sum(w * (vals - vbar) ** 2))
    gx, gy = gradient(fld)
    den = r * ball_integral(grid, gx.values**2 + gy.values**2, 0.0, r)
    if den < 1e-30:
        return None
    return num / den
