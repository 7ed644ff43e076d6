"""Weight exponent bookkeeping and |y|^a measure quadrature.

Everything downstream is parameterised by the exponent a in (-1, 1) of the
degenerate weight |y|^a.  This module owns the derived order s = (1 - a)/2,
the weighted measure of the unit sphere, and the one-dimensional edge
averages of |t|^a used by the finite-volume discretisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "WeightParams",
    "WeightedMeasureTable",
    "s_from_a",
    "edge_weight",
    "surface_weight_measure",
    "circle_rule",
    "measure_table",
]


def s_from_a(a: float) -> float:
    """Order of the fractional operator attached to the weight exponent a."""
    if not -1.0 < a < 1.0:
        raise ValueError(f"weight exponent must lie in (-1, 1), got a={a}")
    return (1.0 - a) / 2.0


@dataclass(frozen=True)
class WeightParams:
    """Weight exponent a, derived order s = (1-a)/2 and spatial dimension n.

    Only n = 1 is supported by the numerical kernels; n is carried so the
    formulas stay dimension-generic.
    """

    a: float
    n: int = 1
    s: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "s", s_from_a(self.a))
        if self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got n={self.n}")

    def require_1d(self) -> None:
        if self.n != 1:
            raise ValueError(f"only n=1 is implemented, got n={self.n}")


@dataclass(frozen=True)
class WeightedMeasureTable:
    """Measure of the weighted unit sphere and the attached layer constant.

    c_n_a = 1 / ((n+a-1) * omega); it degenerates (n+a-1 = 0) for n=1, a=0,
    where it is stored as +inf.
    """

    omega_n_plus_a: float
    c_n_a: float
    quad_points: int


def edge_weight(y_lo: float, y_hi: float, a: float) -> float:
    """Average of |t|^a over [y_lo, y_hi] via the exact antiderivative.

    Finite for every a in (-1, 1) including intervals touching or straddling
    t = 0, where the singularity is integrable.
    """
    if not -1.0 < a < 1.0:
        raise ValueError(f"weight exponent must lie in (-1, 1), got a={a}")
    if not y_lo < y_hi:
        raise ValueError(f"degenerate interval [{y_lo}, {y_hi}]")

    def anti(t: float) -> float:
        return math.copysign(abs(t) ** (1.0 + a), t) / (1.0 + a)

    return (anti(y_hi) - anti(y_lo)) / (y_hi - y_lo)


@lru_cache(maxsize=64)
def circle_rule(a: float, quad_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes/weights for integrals of f(theta) |sin theta|^a on (0, 2pi).

    Midpoint rule in the graded variable v = theta^(1+a) on each quarter
    circle, which integrates the |sin|^a endpoint singularity exactly up to
    the smooth factor (sin u / u)^a.  Nodes avoid all singular angles.

    Returns (theta, w) with sum(w * f(theta)) ~ int_0^{2pi} f |sin|^a dtheta.
    """
    if quad_points < 16:
        raise ValueError(f"need at least 16 quadrature points, got {quad_points}")
    m = max(quad_points // 4, 4)
    v_max = (np.pi / 2.0) ** (1.0 + a)
    hv = v_max / m
    v = (np.arange(m) + 0.5) * hv
    u = v ** (1.0 / (1.0 + a))
    base_w = hv * (np.sin(u) / u) ** a / (1.0 + a)
    theta = np.concatenate([u, np.pi - u[::-1], np.pi + u, 2.0 * np.pi - u[::-1]])
    w = np.concatenate([base_w, base_w[::-1], base_w, base_w[::-1]])
    theta.setflags(write=False)
    w.setflags(write=False)
    return theta, w


def surface_weight_measure(params: WeightParams, quad_points: int) -> float:
    """omega_{n+a}: the |y|^a measure of the unit circle (n = 1)."""
    params.require_1d()
    _, w = circle_rule(params.a, quad_points)
    return float(np.sum(w))


def measure_table(params: WeightParams, quad_points: int = 4096) -> WeightedMeasureTable:
    """Tabulate omega_{n+a} and c_{n,a} = ((n+a-1) omega)^{-1}."""
    omega = surface_weight_measure(params, quad_points)
    layer = params.n + params.a - 1.0
    c = math.inf if layer == 0.0 else 1.0 / (layer * omega)
    return WeightedMeasureTable(omega_n_plus_a=omega, c_n_a=c, quad_points=quad_points)
