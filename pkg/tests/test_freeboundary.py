import numpy as np
import pytest

from fracobs.freeboundary import (
    PointClass,
    classify_point,
    contact_set,
    monotone_cone_check,
    nondegeneracy_fit,
    outward_directions,
    pointwise_decay_fit,
)
from fracobs.grid import Field, GridSpec, build_grid
from fracobs.operator import ReferenceKind, apply_la, make_reference
from fracobs.solver import (
    ObstacleProblem,
    TildeField,
    free_boundary_nodes,
    solve_obstacle,
    to_tilde,
)
from fracobs.weights import WeightParams

A_VALUES = (-0.5, 0.0, 0.5)


def reference_tilde(kind, a, nx=257, ny=129, center_x=0.0):
    """Wrap an analytic reference field as a TildeField rooted at center_x."""
    params = WeightParams(a=a)
    grid = build_grid(GridSpec(1.0, 1.0, nx, ny, params))
    fld = make_reference(kind, params).sample(grid)
    i = int(np.argmin(np.abs(grid.xs - center_x)))
    return TildeField(
        field=fld, g=np.zeros(nx), center_x=float(grid.xs[i]), center_index=i,
        residual_bound=0.0,
    )


# ------------------------------------------------------------------ contact set


def test_contact_set_empty_without_contact():
    grid = build_grid(GridSpec(1.0, 1.0, 33, 17, WeightParams(a=0.0)))
    prob = ObstacleProblem(grid=grid, phi=np.full(33, -1.0), dirichlet=np.zeros((17, 33)))
    sol = solve_obstacle(prob)
    nodes, fb = contact_set(sol, prob)
    assert nodes.size == 0 and fb == []


def test_contact_set_default_symmetric(default_solve_129):
    prob, sol = default_solve_129
    nodes, fb = contact_set(sol, prob)
    assert nodes.size > 0
    assert len(fb) == 2
    assert fb[0] == pytest.approx(-fb[1], abs=1e-9)


def test_contact_set_manufactured_single_crossing(manufactured_solves_129):
    for a, (prob, sol) in manufactured_solves_129.items():
        _, fb = contact_set(sol, prob)
        assert len(fb) == 1
        assert abs(fb[0]) <= prob.grid.hx + 1e-12


# --------------------------------------------------------------- classification


def test_classify_manufactured_profile_regular(manufactured_solves_129):
    for a, (prob, sol) in manufactured_solves_129.items():
        tilde = to_tilde(sol, prob, free_boundary_nodes(sol)[0])
        rec = classify_point(tilde, r_max_cap=0.3)
        assert rec.klass is PointClass.REGULAR
        assert rec.phi0 == pytest.approx(4.0, abs=0.2)
        assert rec.stable


def test_classify_quad_balance_singular():
    # degree-2 polynomial profile: Phi(0+) = 2k + n + a = n + a + 4
    tilde = reference_tilde(ReferenceKind.QUAD_BALANCE, 0.0)
    rec = classify_point(tilde, r_max_cap=0.4)
    assert rec.klass is PointClass.SINGULAR
    assert rec.phi0 == pytest.approx(5.0, abs=0.1)


def test_classify_rejects_wide_class_tol():
    tilde = reference_tilde(ReferenceKind.QUAD_BALANCE, -0.5)
    with pytest.raises(ValueError, match="class_tol"):
        classify_point(tilde, class_tol=0.25)


def test_classification_deterministic(manufactured_solves_129):
    prob, sol = manufactured_solves_129[0.0]
    tilde = to_tilde(sol, prob, free_boundary_nodes(sol)[0])
    rec1 = classify_point(tilde, r_max_cap=0.3)
    rec2 = classify_point(tilde, r_max_cap=0.3)
    assert rec1 == rec2


# ------------------------------------------------------------------- decay fits


@pytest.mark.parametrize("a", A_VALUES)
def test_decay_fit_on_exact_profile(a):
    tilde = reference_tilde(ReferenceKind.GLOBAL_PROFILE, a)
    slope, window = pointwise_decay_fit(tilde)
    assert slope == pytest.approx(1.0 + WeightParams(a=a).s, abs=0.05)
    assert window[0] == pytest.approx(8.0 / 128.0)


def test_decay_fit_on_quad_balance():
    tilde = reference_tilde(ReferenceKind.QUAD_BALANCE, 0.0)
    slope, _ = pointwise_decay_fit(tilde)
    assert slope == pytest.approx(2.0, abs=0.05)


def test_decay_fit_rejects_vanishing_field():
    tilde = reference_tilde(ReferenceKind.CONSTANT, 0.0)
    zero = TildeField(
        field=Field(tilde.field.spec, np.zeros_like(tilde.field.values)),
        g=tilde.g, center_x=tilde.center_x, center_index=tilde.center_index,
        residual_bound=0.0,
    )
    with pytest.raises(ValueError, match="vanishes"):
        pointwise_decay_fit(zero)


# --------------------------------------------------------------- nondegeneracy


@pytest.mark.parametrize("a,expect,tol", [(-0.5, 1.5, 0.15), (0.0, 1.0, 0.1), (0.5, 0.5, 0.15)])
def test_nondegeneracy_exponent_on_manufactured(manufactured_solves_129, a, expect, tol):
    prob, sol = manufactured_solves_129[a]
    tilde = to_tilde(sol, prob, free_boundary_nodes(sol)[0])
    tau = outward_directions(tilde, sol)[0]
    expo, min_val, _ = nondegeneracy_fit(tilde, tau)
    assert expo == pytest.approx(expect, abs=tol)
    assert min_val >= -1e-6


def test_nondegeneracy_vertical_ray_oracle():
    # above an interior contact point of the exact profile, u_tau = w with
    # w(x0, y) ~ y^{2s} (2 x0)^{-s}: the fitted exponent is 2s
    a = 0.0
    tilde = reference_tilde(ReferenceKind.GLOBAL_PROFILE, a)
    # outward direction for contact {x >= 0} is -e1
    expo, min_val, window = nondegeneracy_fit(tilde, -1)
    assert expo == pytest.approx(1.0, abs=0.1)
    assert min_val >= -1e-9


def test_nondegeneracy_rejects_bad_direction():
    tilde = reference_tilde(ReferenceKind.GLOBAL_PROFILE, 0.0)
    with pytest.raises(ValueError):
        nondegeneracy_fit(tilde, 2)
    # tau = +1 points INTO the contact set of the profile: u_tau <= 0 there
    with pytest.raises(ValueError, match="positive"):
        nondegeneracy_fit(tilde, +1)


# ------------------------------------------------------------------- cone check


def test_cone_check_on_profile():
    tilde = reference_tilde(ReferenceKind.GLOBAL_PROFILE, 0.0)
    worst, ok = monotone_cone_check(tilde, [-1])
    assert ok
    assert worst == pytest.approx(0.0, abs=1e-6)  # attained on the contact set


def test_cone_check_flags_wrong_direction():
    tilde = reference_tilde(ReferenceKind.GLOBAL_PROFILE, 0.0)
    worst, ok = monotone_cone_check(tilde, [+1])
    assert not ok
    assert worst < -0.1


def test_cone_check_detects_injected_dip(manufactured_solves_129):
    prob, sol = manufactured_solves_129[0.0]
    tilde = to_tilde(sol, prob, free_boundary_nodes(sol)[0])
    tau = outward_directions(tilde, sol)[0]
    vals = tilde.field.values.copy()
    spec = tilde.field.spec
    j, i = 3, spec.nx // 2 - tau * 3
    vals[j, i] -= 0.05  # dent the field so the directional derivative flips
    dented = TildeField(
        field=Field(spec, vals), g=tilde.g, center_x=tilde.center_x,
        center_index=tilde.center_index, residual_bound=tilde.residual_bound,
    )
    worst, ok = monotone_cone_check(dented, [tau])
    assert not ok and worst < -0.1


# ------------------------------------------------------------------ invariants


def test_support_of_flux_inside_contact(default_solve_129):
    prob, sol = default_solve_129
    flux = apply_la(sol.u, prob.grid).boundary_flux
    from fracobs.solver import complementarity_report

    rep = complementarity_report(sol, prob)
    strong = flux > rep.flux_tol
    assert np.all(sol.contact_mask[strong])


def test_regular_point_contact_is_one_sided(default_solve_129):
    prob, sol = default_solve_129
    mask = sol.contact_mask
    for i in free_boundary_nodes(sol):
        left8 = mask[max(i - 8, 0): i]
        right8 = mask[i + 1: i + 9]
        one_sided = bool(np.all(left8)) != bool(np.all(right8))
        all_there = left8.size == 8 or right8.size == 8
        assert one_sided and all_there


@pytest.mark.parametrize("a", A_VALUES)
def test_decay_nondeg_cross_consistency(manufactured_solves_129, a):
    # decay ~ 1+s and nondegeneracy ~ 2s differ by 1-s = (1+a)/2
    prob, sol = manufactured_solves_129[a]
    tilde = to_tilde(sol, prob, free_boundary_nodes(sol)[0])
    decay, _ = pointwise_decay_fit(tilde)
    tau = outward_directions(tilde, sol)[0]
    nondeg, _, _ = nondegeneracy_fit(tilde, tau)
    assert decay - nondeg == pytest.approx((1.0 + a) / 2.0, abs=0.2)


def test_classify_unresolved_band():
    # an exponent in the open gap between the regular value and the singular
    # floor must not be claimed as either class
    from fracobs.frequency import FrequencyProfile

    a = 0.0
    tilde = reference_tilde(ReferenceKind.QUAD_BALANCE, a)
    radii = np.geomspace(0.0625, 0.4, 24)
    F = radii**4.4  # phi0 = 4.4: outside 4 +/- 0.25, below 5 - 0.25
    z = np.zeros_like(radii)
    prof = FrequencyProfile(
        center_x=0.0, radii=radii, F=F, D=z, G=z, H=z,
        d_r=np.sqrt(radii ** (-1.0) * F), params=WeightParams(a=a),
    )
    rec = classify_point(tilde, profile=prof)
    assert rec.klass is PointClass.UNRESOLVED
    assert rec.phi0 == pytest.approx(4.4, abs=1e-9)
