"""Localized thin obstacle problem: projected SOR solver and its oracle.

Both solvers minimise the same discrete energy

    J(v) = sum_x-edges Ax (dx v)^2 + sum_y-edges Ay (dy v)^2

over fields with fixed lateral/top boundary values and v >= phi on the j = 0
row.  Ax, Ay carry the exact |y|^a edge weights of the grid, so J is the
half-domain weighted Dirichlet energy up to O(h) quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, GridSpec, build_grid
from .operator import ReferenceKind, apply_la, make_reference
from .weights import WeightParams

__all__ = [
    "ObstacleProblem",
    "Solution",
    "TildeField",
    "ComplementarityReport",
    "solve_obstacle",
    "oracle_solve",
    "complementarity_report",
    "to_tilde",
    "discrete_energy",
    "default_scenario",
    "manufactured_scenario",
]


@dataclass
class ObstacleProblem:
    """Obstacle samples on the thin row, Dirichlet data on the outer boundary.

    dirichlet is a full (ny, nx) array; only its lateral columns and top row
    are read.  phi_d2 optionally carries the analytic second derivative of
    the obstacle at the j = 0 nodes.
    """

    grid: Grid
    phi: np.ndarray
    dirichlet: np.ndarray
    phi_d2: np.ndarray | None = None

    def __post_init__(self) -> None:
        spec = self.grid.spec
        self.phi = np.asarray(self.phi, dtype=float)
        self.dirichlet = np.asarray(self.dirichlet, dtype=float)
        if self.phi.shape != (spec.nx,):
            raise ValueError(f"phi must have shape ({spec.nx},)")
        if self.dirichlet.shape != (spec.ny, spec.nx):
            raise ValueError(f"dirichlet must have shape ({spec.ny}, {spec.nx})")
        if not np.all(np.isfinite(self.phi)) or not np.all(np.isfinite(self.dirichlet)):
            raise ValueError("obstacle/boundary data must be finite")
        d2 = np.diff(self.phi, 2) / spec.hx**2
        if d2.size and np.max(np.abs(d2)) > 1e8:
            raise ValueError("obstacle second differences unbounded (C^{2,1} proxy)")
        # contact must not cross the lateral boundary: phi <= trace at the ends
        # (equality allowed: the manufactured profile has contact out to x = rx)
        if self.phi[0] > self.dirichlet[0, 0] or self.phi[-1] > self.dirichlet[0, -1]:
            raise ValueError("obstacle exceeds boundary data at a lateral endpoint")
        if self.phi_d2 is not None:
            self.phi_d2 = np.asarray(self.phi_d2, dtype=float)
            if self.phi_d2.shape != (spec.nx,):
                raise ValueError(f"phi_d2 must have shape ({spec.nx},)")

    def phi_second_derivative(self) -> np.ndarray:
        """Analytic D2 phi when available, else centered second differences
        (one-sided copies at the endpoints)."""
        if self.phi_d2 is not None:
            return self.phi_d2
        h = self.grid.hx
        d2 = np.empty_like(self.phi)
        d2[1:-1] = (self.phi[2:] - 2.0 * self.phi[1:-1] + self.phi[:-2]) / h**2
        d2[0] = d2[1]
        d2[-1] = d2[-2]
        return d2


@dataclass
class Solution:
    u: Field
    contact_mask: np.ndarray
    iterations: int
    converged: bool
    residual: float
    residual_trace: list[float]
    energy_trace: list[float]
    omega: float
    tol: float
    feas_tol: float
    sweep_ordering: str = "red-black"


@dataclass(frozen=True)
class TildeField:
    """u - phi + (D2phi(center) / (2(1+a))) y^2, with the source density g.

    g(x) = D2phi(center) - D2phi(x) is the density of L_a tilde_u against
    |y|^a away from the contact set, fixed by computing L_a on the transform
    directly; the divergence identity check depends on this orientation.
    """

    field: Field
    g: np.ndarray
    center_x: float
    center_index: int
    residual_bound: float


def _edge_coefficients(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Ax[j]: x-edge energy coefficient per row; Ay[j]: y-edge coefficient per
    interface j -> j+1 (both for unit-width columns)."""
    spec = grid.spec
    hx, hy = grid.hx, grid.hy
    face_len = np.full(spec.ny, hy)
    face_len[0] = hy / 2.0
    face_len[-1] = hy / 2.0
    ax = grid.w_row * face_len / hx
    ay = grid.w_half * hx / hy
    return ax, ay


def discrete_energy(values: np.ndarray, grid: Grid) -> float:
    """Half-domain weighted Dirichlet energy of a (ny, nx) sample array."""
    ax, ay = _edge_coefficients(grid)
    ex = np.sum(ax[:, None] * (values[:, 1:] - values[:, :-1]) ** 2)
    ey = np.sum(ay[:, None] * (values[1:, :] - values[:-1, :]) ** 2)
    return float(ex + ey)


def _initial_values(problem: ObstacleProblem) -> np.ndarray:
    """Zero start with the boundary data imposed; only the lateral columns and
    the top row of the dirichlet array are read."""
    u = np.zeros_like(problem.dirichlet)
    u[:, 0] = problem.dirichlet[:, 0]
    u[:, -1] = problem.dirichlet[:, -1]
    u[-1, :] = problem.dirichlet[-1, :]
    u[0, 1:-1] = np.maximum(u[0, 1:-1], problem.phi[1:-1])
    return u


def _gauss_seidel_targets(u: np.ndarray, ax: np.ndarray, ay: np.ndarray) -> np.ndarray:
    """Unconstrained single-node minimisers on the unknown block
    (i = 1..nx-2, j = 0..ny-2)."""
    w = u[:-1, :-2]
    e = u[:-1, 2:]
    n = u[1:, 1:-1]
    num = ax[:-1, None] * (w + e) + ay[:, None] * n
    den = 2.0 * ax[:-1, None] + ay[:, None]
    num[1:, :] += ay[:-1, None] * u[:-2, 1:-1]
    den[1:, :] += ay[:-1, None]
    return num / den


def _projected_residual(
    u: np.ndarray, targets: np.ndarray, phi: np.ndarray
) -> float:
    proj = targets.copy()
    proj[0, :] = np.maximum(proj[0, :], phi[1:-1])
    return float(np.max(np.abs(u[:-1, 1:-1] - proj)))


def solve_obstacle(
    problem: ObstacleProblem,
    omega: float = 1.5,
    max_iter: int | None = None,
    tol: float = 1e-8,
) -> Solution:
    """Projected SOR (red-black ordering) on the discrete energy.

    Terminates when the scaled projected residual drops below tol; returns a
    partial solution flagged non-converged at max_iter.  The fixed point does
    not depend on the sweep ordering; iterate paths do, hence the explicit
    sweep_ordering tag on the Solution.
    """
    if not 0.0 < omega < 2.0:
        raise ValueError(f"relaxation parameter must lie in (0, 2), got {omega}")
    grid = problem.grid
    spec = grid.spec
    if max_iter is None:
        max_iter = 50 * spec.nx * spec.ny
    ax, ay = _edge_coefficients(grid)
    u = _initial_values(problem)
    phi = problem.phi
    II, JJ = np.meshgrid(np.arange(1, spec.nx - 1), np.arange(spec.ny - 1))
    colors = ((II + JJ) % 2).astype(bool)
    residual_trace: list[float] = []
    energy_trace: list[float] = [discrete_energy(u, grid)]
    converged = False
    sweeps = 0
    scale = 1.0 + float(np.max(np.abs(u)))
    for sweeps in range(1, max_iter + 1):
        for color in (False, True):
            targets = _gauss_seidel_targets(u, ax, ay)
            block = u[:-1, 1:-1]
            upd = block + omega * (targets - block)
            upd[0, :] = np.maximum(upd[0, :], phi[1:-1])
            block[colors == color] = upd[colors == color]
        res = _projected_residual(u, _gauss_seidel_targets(u, ax, ay), phi)
        scale = 1.0 + float(np.max(np.abs(u)))
        residual_trace.append(res / scale)
        energy_trace.append(discrete_energy(u, grid))
        if res / scale < tol:
            converged = True
            break
    feas_tol = 10.0 * tol * scale
    contact = (u[0, :] - phi) <= feas_tol
    return Solution(
        u=Field(spec, u),
        contact_mask=contact,
        iterations=sweeps,
        converged=converged,
        residual=residual_trace[-1] if residual_trace else np.inf,
        residual_trace=residual_trace,
        energy_trace=energy_trace,
        omega=omega,
        tol=tol,
        feas_tol=feas_tol,
    )


def _energy_gradient(u: np.ndarray, ax: np.ndarray, ay: np.ndarray) -> np.ndarray:
    """Gradient of the discrete energy restricted to the unknown block."""
    g = np.zeros_like(u)
    dx = ax[:, None] * (u[:, 1:] - u[:, :-1])
    g[:, 1:] += 2.0 * dx
    g[:, :-1] -= 2.0 * dx
    dy = ay[:, None] * (u[1:, :] - u[:-1, :])
    g[1:, :] += 2.0 * dy
    g[:-1, :] -= 2.0 * dy
    out = np.zeros_like(u)
    out[:-1, 1:-1] = g[:-1, 1:-1]
    return out


def oracle_solve(
    problem: ObstacleProblem, tol: float = 1e-10, max_iter: int = 2_000_000
) -> Solution:
    """Projected gradient descent on the identical discrete energy.

    Independent verification path for solve_obstacle; dense-cost guard keeps
    it to grids no larger than 65 x 33.  Fixed step 1/L with L a safetied
    power-iteration bound on the energy Hessian.
    """
    grid = problem.grid
    spec = grid.spec
    if spec.nx > 65 or spec.ny > 33:
        raise ValueError("oracle_solve is limited to grids of at most 65 x 33")
    ax, ay = _edge_coefficients(grid)
    rng = np.random.default_rng(12345)
    v = np.zeros((spec.ny, spec.nx))
    v[:-1, 1:-1] = rng.standard_normal((spec.ny - 1, spec.nx - 2))
    for _ in range(80):
        w = _energy_gradient(v, ax, ay)
        nrm = np.sqrt(np.sum(w * w))
        v = w / nrm
    lips = 1.05 * nrm
    step = 1.0 / lips

    u = _initial_values(problem)
    phi = problem.phi

    def project(w: np.ndarray) -> np.ndarray:
        w[0, 1:-1] = np.maximum(w[0, 1:-1], phi[1:-1])
        return w

    energy_trace = [discrete_energy(u, grid)]
    gm_norm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = _energy_gradient(u, ax, ay)
        nxt = u.copy()
        nxt[:-1, 1:-1] -= step * g[:-1, 1:-1]
        nxt = project(nxt)
        gm_norm = float(np.max(np.abs(nxt - u)) / step)
        u = nxt
        if it % 16 == 0:
            energy_trace.append(discrete_energy(u, grid))
        if gm_norm < tol:
            break
    converged = gm_norm < tol
    energy_trace.append(discrete_energy(u, grid))
    feas_tol = 10.0 * tol * (1.0 + float(np.max(np.abs(u))))
    contact = (u[0, :] - phi) <= feas_tol
    return Solution(
        u=Field(spec, u),
        contact_mask=contact,
        iterations=it,
        converged=converged,
        residual=gm_norm,
        residual_trace=[gm_norm],
        energy_trace=energy_trace,
        omega=0.0,
        tol=tol,
        feas_tol=feas_tol,
        sweep_ordering="projected-gradient",
    )


@dataclass(frozen=True)
class ComplementarityReport:
    max_feasibility_violation: float
    min_boundary_flux: float
    max_complementarity: float
    contact_count: int
    feas_tol: float
    flux_tol: float
    comp_tol: float

    @property
    def passed(self) -> bool:
        return (
            self.max_feasibility_violation <= self.feas_tol
            and self.min_boundary_flux >= -self.flux_tol
            and self.max_complementarity <= self.comp_tol
        )


def complementarity_report(
    solution: Solution,
    problem: ObstacleProblem,
    feas_tol: float | None = None,
    flux_tol: float | None = None,
    comp_tol: float | None = None,
) -> ComplementarityReport:
    """Evaluate the three discrete Signorini conditions on the thin row.

    Default tolerances: feasibility from the solver, flux/complementarity
    from the O(h^{1+a}) consistency scale of the discrete Neumann trace.
    """
    grid = problem.grid
    spec = grid.spec
    u = solution.u.values
    flux = apply_la(solution.u, grid).boundary_flux[1:-1]
    gap = u[0, 1:-1] - problem.phi[1:-1]
    if feas_tol is None:
        feas_tol = solution.feas_tol
    if flux_tol is None:
        d2 = problem.phi_second_derivative()
        curv = 1.0 + float(np.max(np.abs(d2)))
        umax = 1.0 + float(np.max(np.abs(u)))
        flux_tol = 10.0 * grid.hy ** (1.0 + grid.params.a) * curv * umax
    if comp_tol is None:
        comp_tol = max(feas_tol, flux_tol)
    return ComplementarityReport(
        max_feasibility_violation=float(np.max(-gap, initial=0.0)),
        min_boundary_flux=float(np.min(flux)),
        max_complementarity=float(np.max(np.minimum(gap, flux))),
        contact_count=int(np.sum(solution.contact_mask)),
        feas_tol=feas_tol,
        flux_tol=flux_tol,
        comp_tol=comp_tol,
    )


def free_boundary_nodes(solution: Solution) -> list[int]:
    """Indices of contact nodes adjacent to a non-contact node."""
    mask = solution.contact_mask
    out = []
    for i in range(len(mask)):
        if not mask[i]:
            continue
        left = mask[i - 1] if i > 0 else True
        right = mask[i + 1] if i < len(mask) - 1 else True
        if not (left and right):
            out.append(i)
    return out


def to_tilde(solution: Solution, problem: ObstacleProblem, center_index: int) -> TildeField:
    """Subtract the obstacle and add the compensating y^2 term around a free
    boundary node, and report the discrete check of |L_a tilde| <= C |y|^a |x - c|."""
    grid = problem.grid
    spec = grid.spec
    if center_index not in free_boundary_nodes(solution):
        raise ValueError(f"node {center_index} is not on the free boundary")
    xs, ys = grid.xs, grid.ys
    d2 = problem.phi_second_derivative()
    d2c = float(d2[center_index])
    a = grid.params.a
    vals = (
        solution.u.values
        - problem.phi[None, :]
        + (d2c / (2.0 * (1.0 + a))) * ys[:, None] ** 2
    )
    g = d2c - d2
    tilde = Field(spec, vals)
    res = apply_la(tilde, grid)
    X, Y = np.meshgrid(xs, ys)
    dist = np.abs(X - xs[center_index])
    wgt = np.where(Y > 0, np.where(Y > 0, Y, 1.0) ** a, np.inf)
    denom = wgt * np.maximum(dist, 2.0 * grid.hx)
    ratio = np.abs(res.interior.values) / denom
    bound = float(np.max(ratio[res.interior_mask]))
    return TildeField(
        field=tilde,
        g=g,
        center_x=float(xs[center_index]),
        center_index=center_index,
        residual_bound=bound,
    )


def default_scenario(a: float = 0.0, nx: int = 129, ny: int = 65) -> ObstacleProblem:
    """phi = 0.5 - 2 x^2 with zero Dirichlet data on [-1,1] x [0,1]."""
    grid = build_grid(GridSpec(rx=1.0, ry=1.0, nx=nx, ny=ny, params=WeightParams(a=a)))
    xs = grid.xs
    phi = 0.5 - 2.0 * xs**2
    return ObstacleProblem(
        grid=grid,
        phi=phi,
        dirichlet=np.zeros((ny, nx)),
        phi_d2=np.full(nx, -4.0),
    )


def manufactured_scenario(a: float = 0.0, nx: int = 129, ny: int = 65) -> ObstacleProblem:
    """phi = 0 with the normalised global profile as Dirichlet data; the exact
    continuum solution is the profile itself."""
    from .weights import WeightParams
    from .grid import GridSpec
    from .operator import ReferenceKind, make_reference

    params = WeightParams(a=a)
    grid = build_grid(GridSpec(rx=1.0, ry=1.0, nx=nx, ny=ny, params=params))
    profile = make_reference(ReferenceKind.GLOBAL_PROFILE, params)
    X, Y = np.meshgrid(grid.xs, grid.ys)
    return ObstacleProblem(
        grid=grid,
        phi=np.zeros(nx),
        dirichlet=np.asarray(profile(X, Y), dtype=float),
        phi_d2=np.zeros(nx),
    )
