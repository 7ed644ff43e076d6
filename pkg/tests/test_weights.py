import math

import numpy as np
import pytest
from scipy.special import beta

from fracobs.weights import (
    WeightParams,
    circle_rule,
    edge_weight,
    measure_table,
    s_from_a,
    surface_weight_measure,
)


def beta_oracle(a: float) -> float:
    # int_0^{2pi} |sin t|^a dt = 2 B((a+1)/2, 1/2)
    return 2.0 * beta((a + 1.0) / 2.0, 0.5)


def test_s_from_a_values():
    assert s_from_a(0.0) == 0.5
    assert s_from_a(-0.5) == 0.75
    assert s_from_a(0.5) == 0.25


@pytest.mark.parametrize("a", [1.0, -1.0, 1.5, -2.0])
def test_s_from_a_rejects_boundary(a):
    with pytest.raises(ValueError):
        s_from_a(a)


def test_params_carry_derived_order():
    p = WeightParams(a=-0.5)
    assert p.s == 0.75 and p.n == 1
    with pytest.raises(ValueError):
        WeightParams(a=0.3, n=2).require_1d()


def test_edge_weight_constant_weight():
    assert edge_weight(0.0, 0.1, 0.0) == pytest.approx(1.0)


def test_edge_weight_antiderivative():
    # (1/h) int_0^h t^a dt = h^a / (1+a)
    assert edge_weight(0.0, 0.1, 0.5) == pytest.approx(0.1**0.5 / 1.5, rel=1e-12)


@pytest.mark.parametrize("a", [-0.7, -0.5, 0.0, 0.3, 0.9])
def test_edge_weight_even_under_reflection(a):
    h = 0.37
    assert edge_weight(-h, h, a) == pytest.approx(edge_weight(0.0, h, a), rel=1e-12)
    assert edge_weight(-0.5, -0.2, a) == pytest.approx(edge_weight(0.2, 0.5, a), rel=1e-12)


def test_edge_weight_rejects_degenerate_interval():
    with pytest.raises(ValueError):
        edge_weight(0.3, 0.3, 0.0)


def test_omega_unweighted_circle():
    assert surface_weight_measure(WeightParams(a=0.0), 1024) == pytest.approx(
        2.0 * math.pi, abs=1e-12
    )


@pytest.mark.parametrize("a,tol", [(0.5, 1e-6), (0.3, 1e-6), (-0.5, 1e-4)])
def test_omega_matches_beta_oracle(a, tol):
    got = surface_weight_measure(WeightParams(a=a), 4096)
    assert abs(got - beta_oracle(a)) < tol


@pytest.mark.parametrize("a", [0.0, 0.3, 0.9])
def test_omega_converges_under_doubling(a):
    params = WeightParams(a=a)
    vals = [surface_weight_measure(params, n) for n in (256, 512, 1024, 2048, 4096)]
    diffs = [abs(v2 - v1) for v1, v2 in zip(vals, vals[1:])]
    for d1, d2 in zip(diffs, diffs[1:]):
        assert d2 <= d1 + 1e-15


def test_coarse_quadrature_is_detectably_wrong():
    # the smallest admissible rule must be visibly off the oracle, so the
    # battery tolerance catches a sabotaged quadrature
    got = surface_weight_measure(WeightParams(a=0.5), 16)
    assert abs(got - beta_oracle(0.5)) > 1e-5


def test_quadrature_rejects_too_few_points():
    with pytest.raises(ValueError):
        surface_weight_measure(WeightParams(a=0.5), 8)


def test_circle_rule_nodes_avoid_singular_angles():
    theta, w = circle_rule(-0.5, 64)
    assert np.all(w > 0.0)
    for bad in (0.0, math.pi, 2.0 * math.pi):
        assert np.min(np.abs(theta - bad)) > 1e-6


@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_measure_table_identity(a):
    params = WeightParams(a=a)
    t = measure_table(params)
    assert t.omega_n_plus_a > 0
    layer = params.n + a - 1.0
    if layer == 0.0:
        assert math.isinf(t.c_n_a)
    else:
        assert t.c_n_a * layer * t.omega_n_plus_a == pytest.approx(1.0, rel=1e-14)
