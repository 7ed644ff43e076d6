"""Numerical laboratory for the thin obstacle problem of the degenerate
operator div(|y|^a grad u) on the half strip, the local extension of the
obstacle problem for the fractional Laplacian of order s = (1-a)/2.

Library layout: `weights` (exponent bookkeeping and |y|^a quadrature),
`grid`/`operator` (fields, the finite-volume operator, reference solutions),
`solver` (projected SOR and its projected-gradient oracle), `frequency`
(F/D/G/H scans and the corrected frequency), `blowup` (rescalings and the
profile distance), `freeboundary` (contact set, classification, exponent
fits), `cli` (the `fracobs` batch front-end).
"""

from .weights import WeightParams, edge_weight, s_from_a, surface_weight_measure
from .grid import Field, GridSpec, build_grid, gradient, interpolate, sample_field
from .operator import ReferenceKind, apply_la, make_reference
from .solver import (
    ObstacleProblem,
    default_scenario,
    manufactured_scenario,
    oracle_solve,
    solve_obstacle,
    to_tilde,
)
from .frequency import calibrate_c0, monotonicity_check, phi, radial_scan
from .blowup import profile_distance, rescale
from .freeboundary import classify_point, contact_set

__version__ = "0.1.0"
