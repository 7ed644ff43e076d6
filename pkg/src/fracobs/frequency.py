"""Frequency-function machinery: F, D, G, H, d_r, the corrected frequency
Phi(r) = (r + C0 r^2) d/dr log max(F(r), r^{n+a+4}), its monotonicity check,
the C0 calibration ladder and the divergence identity residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, ball_integral, gradient, interpolate_many
from .weights import WeightParams, circle_rule

__all__ = [
    "FrequencyProfile",
    "PhiSeries",
    "MonotonicityReport",
    "CalibrationResult",
    "radial_scan",
    "phi",
    "phi0_estimate",
    "monotonicity_check",
    "calibrate_c0",
    "divergence_identity_residual",
    "decay_bound_check",
    "DecayCheck",
    "C0_LADDER",
]

C0_LADDER = (0.0, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0)


@dataclass(frozen=True)
class FrequencyProfile:
    """Tabulated r -> (F, D, G, H, d_r) around a point on the thin line.

    F(r) = int_{S_r} u^2 |y|^a dsigma,  G(r) = int_{B_r} u^2 |y|^a dX,
    D(r) = H(r) = int_{B_r} |grad u|^2 |y|^a dX,
    d_r  = (r^{-(n+a)} F(r))^{1/2}.
    """

    center_x: float
    radii: np.ndarray
    F: np.ndarray
    D: np.ndarray
    G: np.ndarray
    H: np.ndarray
    d_r: np.ndarray
    params: WeightParams


@dataclass(frozen=True)
class PhiSeries:
    radii: np.ndarray
    values: np.ndarray
    C0: float
    f_branch: np.ndarray  # True where F(r) >= r^{n+a+4} achieved the max
    params: WeightParams


@dataclass(frozen=True)
class MonotonicityReport:
    worst_dip: float
    dip_radius: float
    passed: bool
    tol: float


@dataclass(frozen=True)
class CalibrationResult:
    C0: float
    passed: bool
    worst_dip: float
    scan: tuple  # (C0, worst_dip) pairs over the ladder


@dataclass(frozen=True)
class DecayCheck:
    mu: float
    ratio_smallest: float
    ratio_largest: float
    max_ratio: float
    passed: bool


def radial_scan(
    fld: Field,
    center_x: float,
    r_min: float,
    r_max: float,
    count: int = 24,
    quad_points: int = 512,
) -> FrequencyProfile:
    """Quadratures of F, G, D=H over a log-spaced radius ladder.

    Sphere integrals use the weighted circle rule on interpolated values;
    ball integrals are cell sums over cells whose centers lie in the ball.
    """
    spec = fld.spec
    if count < 16:
        raise ValueError(f"need at least 16 radii, got {count}")
    if r_min <= 0.0 or r_min >= r_max:
        raise ValueError("radii must satisfy 0 < r_min < r_max")
    if center_x - r_max < -spec.rx or center_x + r_max > spec.rx or r_max > spec.ry:
        raise ValueError("ball B_{r_max} exceeds the grid")
    a = spec.params.a
    grid = Grid(spec)
    radii = np.geomspace(r_min, r_max, count)
    theta, w = circle_rule(a, quad_points)
    ct, st = np.cos(theta), np.sin(theta)
    gx, gy = gradient(fld)
    grad_sq = gx.values**2 + gy.values**2
    u_sq = fld.values**2
    F = np.empty(count)
    D = np.empty(count)
    G = np.empty(count)
    for k, r in enumerate(radii):
        vals = interpolate_many(fld, center_x + r * ct, r * st)
        F[k] = r ** (1.0 + a) * float(np.sum(w * vals**2))
        D[k] = ball_integral(grid, grad_sq, center_x, r)
        G[k] = ball_integral(grid, u_sq, center_x, r)
    d_r = np.sqrt(radii ** (-(1.0 + a)) * F)
    return FrequencyProfile(
        center_x=center_x,
        radii=radii,
        F=F,
        D=D,
        G=G,
        H=D.copy(),
        d_r=d_r,
        params=spec.params,
    )


def phi(profile: FrequencyProfile, C0: float) -> PhiSeries:
    """Corrected frequency on the profile's radius ladder.

    The log-derivative of max(F(r), r^{n+a+4}) is taken by symmetric
    differences on the ladder (one-sided at the endpoints).
    """
    r = profile.radii
    if r.size < 3:
        raise ValueError("need at least 3 radii")
    na = profile.params.n + profile.params.a
    comparison = r ** (na + 4.0)
    f_branch = profile.F >= comparison
    m = np.maximum(profile.F, comparison)
    if np.any(m <= 0.0):
        raise ValueError("field vanishes identically near the center")
    logm = np.log(m)
    logr = np.log(r)
    # symmetric differences in log r (exact on power laws), one-sided at the ends
    slope = np.empty_like(logm)
    slope[1:-1] = (logm[2:] - logm[:-2]) / (logr[2:] - logr[:-2])
    slope[0] = (logm[1] - logm[0]) / (logr[1] - logr[0])
    slope[-1] = (logm[-1] - logm[-2]) / (logr[-1] - logr[-2])
    values = (1.0 + C0 * r) * slope
    return PhiSeries(radii=r, values=values, C0=C0, f_branch=f_branch, params=profile.params)


def phi0_estimate(series: PhiSeries, stability_window: float = 0.1) -> tuple[float, bool]:
    """Phi(0+) estimate: the value at the smallest resolved radius with the
    known (1 + C0 r) factor divided out (it tends to 1 and would otherwise
    bias the finite-radius read-off); stable when the three smallest radii
    agree within the window."""
    v = series.values / (1.0 + series.C0 * series.radii)
    stable = bool(np.max(v[:3]) - np.min(v[:3]) <= stability_window)
    return float(v[0]), stable


def monotonicity_check(series: PhiSeries, tol: float = 1e-2) -> MonotonicityReport:
    """Most negative consecutive increment of Phi; passes iff >= -tol."""
    inc = np.diff(series.values)
    k = int(np.argmin(inc))
    worst = float(inc[k])
    return MonotonicityReport(
        worst_dip=worst,
        dip_radius=float(series.radii[k + 1]),
        passed=worst >= -tol,
        tol=tol,
    )


def calibrate_c0(profile: FrequencyProfile, tol: float = 1e-2) -> CalibrationResult:
    """Smallest ladder C0 whose Phi passes the monotonicity check at tol.

    Never raises on failure: the result carries the best dip found so the
    caller can report it.
    """
    scan = []
    best = -math.inf
    for c0 in C0_LADDER:
        rep = monotonicity_check(phi(profile, c0), tol)
        scan.append((c0, rep.worst_dip))
        best = max(best, rep.worst_dip)
        if rep.passed:
            return CalibrationResult(C0=c0, passed=True, worst_dip=rep.worst_dip, scan=tuple(scan))
    return CalibrationResult(C0=math.nan, passed=False, worst_dip=best, scan=tuple(scan))


def divergence_identity_residual(
    fld: Field,
    g_samples: np.ndarray,
    center_x: float,
    r: float,
    quad_points: int = 1024,
) -> float:
    """Relative residual of the Rellich/divergence identity

        r int_{S_r} (|u_tau|^2 - |u_nu|^2) |y|^a dsigma
          = int_{B_r} ((n+a-1) |grad u|^2 - 2 <X, grad u> g) |y|^a dX

    with X relative to the center and g the source density extended
    constantly in y.  The residual is measured against the larger of the two
    sides and the total tangential+normal sphere energy, so it stays
    meaningful when both sides vanish identically.
    """
    spec = fld.spec
    a = spec.params.a
    na = spec.params.n + a
    grid = Grid(spec)
    theta, w = circle_rule(a, quad_points)
    ct, st = np.cos(theta), np.sin(theta)
    gx_f, gy_f = gradient(fld)
    px = center_x + r * ct
    py = r * st
    gx = interpolate_many(gx_f, px, py)
    gy = interpolate_many(gy_f, px, py) * np.sign(st)  # odd component under reflection
    u_nu = gx * ct + gy * st
    u_tau = -gx * st + gy * ct
    lhs = r * r ** (1.0 + a) * float(np.sum(w * (u_tau**2 - u_nu**2)))
    energy_scale = r * r ** (1.0 + a) * float(np.sum(w * (u_tau**2 + u_nu**2)))

    grad_sq = gx_f.values**2 + gy_f.values**2
    X, Y = np.meshgrid(grid.xs, grid.ys)
    x_dot_grad = (X - center_x) * gx_f.values + Y * gy_f.values
    g_grid = np.broadcast_to(np.asarray(g_samples, dtype=float)[None, :], X.shape)
    rhs = (na - 1.0) * ball_integral(grid, grad_sq, center_x, r) - 2.0 * ball_integral(
        grid, x_dot_grad * g_grid, center_x, r
    )
    denom = max(abs(lhs), abs(rhs), energy_scale) + 1e-300
    return abs(lhs - rhs) / denom


def decay_bound_check(series: PhiSeries, profile: FrequencyProfile) -> DecayCheck:
    """F(r) <= C r^mu with mu = Phi(0+): the ratio F/r^mu must not explode as
    r decreases (smallest-radius ratio at most 10x the largest-radius one)."""
    mu, _ = phi0_estimate(series)
    ratio = profile.F / profile.radii**mu
    return DecayCheck(
        mu=mu,
        ratio_smallest=float(ratio[0]),
        ratio_largest=float(ratio[-1]),
        max_ratio=float(np.max(ratio)),
        passed=bool(ratio[0] <= 10.0 * ratio[-1]),
    )
