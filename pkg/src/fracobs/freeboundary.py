"""Contact set extraction, free-boundary point classification and the decay,
nondegeneracy and directional-monotonicity exponent fits.

Classification thresholds: a point is Regular when Phi(0+) is within
class_tol of n+a+2(1+s) = n+3, Singular when Phi(0+) >= n+a+4 - class_tol.
The gap between the two values is 1+a, so class_tol must stay below
(1+a)/2 for the classes to be disjoint; this is enforced.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .frequency import (
    calibrate_c0,
    monotonicity_check,
    phi,
    phi0_estimate,
    radial_scan,
)
from .grid import gradient, interpolate_many
from .solver import ObstacleProblem, Solution, TildeField

__all__ = [
    "PointClass",
    "ClassificationRecord",
    "FreeBoundaryReport",
    "contact_set",
    "classify_point",
    "default_radii",
    "pointwise_decay_fit",
    "nondegeneracy_fit",
    "monotone_cone_check",
    "outward_directions",
]


class PointClass(Enum):
    REGULAR = "Regular"
    SINGULAR = "Singular"
    UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class FreeBoundaryReport:
    """Contact nodes, sub-node free boundary points and the per-point
    analysis rows (classification, exponent fits, blowup distances)."""

    contact_nodes: tuple
    fb_points: tuple
    points: tuple


@dataclass(frozen=True)
class ClassificationRecord:
    phi0: float
    stable: bool
    klass: PointClass
    c0: float
    worst_dip: float
    monotone_passed: bool
    class_tol: float
    r_min: float
    r_max: float


def contact_set(
    solution: Solution, problem: ObstacleProblem, feas_tol: float | None = None
) -> tuple[np.ndarray, list[float]]:
    """Contact nodes (u - phi <= feas_tol on the thin row) and sub-node free
    boundary points located by linear interpolation of the gap crossing."""
    if feas_tol is None:
        feas_tol = solution.feas_tol
    xs = problem.grid.xs
    gap = solution.u.values[0, :] - problem.phi
    mask = gap <= feas_tol
    nodes = np.where(mask)[0]
    fb: list[float] = []
    excess = gap - feas_tol
    for i in range(len(mask) - 1):
        if mask[i] != mask[i + 1]:
            lo, hi = (i, i + 1)
            t = (0.0 - excess[lo]) / (excess[hi] - excess[lo])
            fb.append(float(xs[lo] + t * (xs[hi] - xs[lo])))
    return nodes, fb


def default_radii(tilde: TildeField, r_max_cap: float | None = None) -> tuple[float, float]:
    """Scan window: r_min = 8 max(hx, hy), r_max = half the distance from the
    center to the nearest outer boundary (optionally capped)."""
    spec = tilde.field.spec
    r_min = 8.0 * max(spec.hx, spec.hy)
    r_max = 0.5 * min(spec.rx - abs(tilde.center_x), spec.ry)
    if r_max_cap is not None:
        r_max = min(r_max, r_max_cap)
    if r_max <= r_min:
        raise ValueError("scan window is empty: center too close to the boundary")
    return r_min, r_max


def classify_point(
    tilde: TildeField,
    c0_policy: float | str = "calibrate",
    class_tol: float | None = None,
    count: int = 24,
    tol: float = 1e-2,
    r_max_cap: float | None = None,
    profile=None,
) -> ClassificationRecord:
    """Scan (unless a precomputed profile is given), calibrate or fix C0, and
    classify by Phi(0+)."""
    params = tilde.field.spec.params
    a = params.a
    if class_tol is None:
        # 0.25 where the class gap 1+a allows it, strictly below (1+a)/2 always
        class_tol = min(0.25, 0.49 * (1.0 + a))
    if not class_tol < (1.0 + a) / 2.0:
        raise ValueError(
            f"class_tol={class_tol} does not separate the classes for a={a}; "
            f"needs class_tol < {(1.0 + a) / 2.0}"
        )
    if profile is None:
        r_min, r_max = default_radii(tilde, r_max_cap)
        profile = radial_scan(tilde.field, tilde.center_x, r_min, r_max, count)
    else:
        r_min, r_max = float(profile.radii[0]), float(profile.radii[-1])
    if c0_policy == "calibrate":
        cal = calibrate_c0(profile, tol)
        c0 = cal.C0 if cal.passed else max(C for C, _ in cal.scan)
        mono_passed, worst = cal.passed, cal.worst_dip
    else:
        c0 = float(c0_policy)
        rep = monotonicity_check(phi(profile, c0), tol)
        mono_passed, worst = rep.passed, rep.worst_dip
    series = phi(profile, c0)
    phi0, stable = phi0_estimate(series)
    regular_value = params.n + 3.0
    singular_floor = params.n + a + 4.0
    if not stable:
        klass = PointClass.UNRESOLVED
    elif abs(phi0 - regular_value) < class_tol:
        klass = PointClass.REGULAR
    elif phi0 >= singular_floor - class_tol:
        klass = PointClass.SINGULAR
    else:
        klass = PointClass.UNRESOLVED
    return ClassificationRecord(
        phi0=phi0,
        stable=stable,
        klass=klass,
        c0=c0,
        worst_dip=worst,
        monotone_passed=mono_passed,
        class_tol=class_tol,
        r_min=r_min,
        r_max=r_max,
    )


def pointwise_decay_fit(
    tilde: TildeField, radii: np.ndarray | None = None
) -> tuple[float, tuple[float, float]]:
    """Least-squares slope of log sup_{B_r} |tilde_u| against log r.

    The slope is the pointwise regularity exponent, 1+s at regular points.
    Default window: [8 max(hx,hy), 0.1 * domain width].
    """
    spec = tilde.field.spec
    if radii is None:
        lo = 8.0 * max(spec.hx, spec.hy)
        hi = 0.1 * 2.0 * spec.rx
        radii = np.geomspace(lo, hi, 16)
    X, Y = np.meshgrid(spec.xs(), spec.ys())
    dist = np.hypot(X - tilde.center_x, Y)
    vals = np.abs(tilde.field.values)
    order = np.argsort(dist.ravel())
    sorted_dist = dist.ravel()[order]
    running_max = np.maximum.accumulate(vals.ravel()[order])
    sup = np.empty_like(radii)
    for k, r in enumerate(radii):
        idx = np.searchsorted(sorted_dist, r, side="right") - 1
        sup[k] = running_max[max(idx, 0)]
    if np.any(sup <= 0.0):
        raise ValueError("sup |tilde_u| vanishes on the fit window")
    slope = float(np.polyfit(np.log(radii), np.log(sup), 1)[0])
    return slope, (float(radii[0]), float(radii[-1]))


def outward_directions(tilde: TildeField, solution: Solution) -> list[int]:
    """Thin-space unit directions pointing out of the contact set at the
    center (n = 1: subset of {-1, +1})."""
    mask = solution.contact_mask
    i = tilde.center_index
    out = []
    if i > 0 and not mask[i - 1]:
        out.append(-1)
    if i < len(mask) - 1 and not mask[i + 1]:
        out.append(+1)
    return out


def nondegeneracy_fit(
    tilde: TildeField,
    tau: int,
    offset: float | None = None,
    tol: float = 1e-6,
) -> tuple[float, float, tuple[float, float]]:
    """Growth exponent of the tangential derivative u_tau above the contact
    set, fitted against the distance to the contact plane.

    The fit samples tau * d_x tilde_u on the vertical ray over a point a
    fixed offset inside the contact set, where dist(X, contact) = y and the
    expected exponent is 2s.  Also returns the minimum of u_tau over the
    B_{1/8}-scaled neighborhood of the center (the sign witness).
    """
    spec = tilde.field.spec
    if tau not in (-1, 1):
        raise ValueError("tau must be -1 or +1 in the thin space")
    if offset is None:
        offset = 0.15 * spec.rx
    x0 = tilde.center_x - tau * offset  # into the contact set
    gx, _ = gradient(tilde.field)
    y_lo = 2.0 * spec.hy
    y_hi = 0.6 * offset
    if y_hi <= y_lo:
        raise ValueError("nondegeneracy fit window is empty at this resolution")
    ys = np.geomspace(y_lo, y_hi, 12)
    vals = tau * interpolate_many(gx, np.full_like(ys, x0), ys)
    if np.any(vals <= 0.0):
        raise ValueError("u_tau not positive on the vertical fit ray")
    expo = float(np.polyfit(np.log(ys), np.log(vals), 1)[0])
    X, Y = np.meshgrid(spec.xs(), spec.ys())
    near = np.hypot(X - tilde.center_x, Y) <= spec.rx / 8.0
    min_val = float(np.min((tau * gx.values)[near]))
    return expo, min_val, (float(y_lo), float(y_hi))


def monotone_cone_check(
    tilde: TildeField,
    directions: list[int],
    radius: float | None = None,
    tol: float = 1e-6,
) -> tuple[float, bool]:
    """Minimum of the discrete directional derivative over the direction fan
    and over B_radius(center); passes iff >= -tol."""
    spec = tilde.field.spec
    if radius is None:
        radius = spec.rx / 8.0
    gx, _ = gradient(tilde.field)
    X, Y = np.meshgrid(spec.xs(), spec.ys())
    near = np.hypot(X - tilde.center_x, Y) <= radius
    worst = min(float(np.min((tau * gx.values)[near])) for tau in directions)
    return worst, worst >= -tol
