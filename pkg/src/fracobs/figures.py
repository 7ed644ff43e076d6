"""Figure rendering for the report path.

Figures are written next to the delimited output of `fracobs run`; they are
a convenience view of the same numbers, never an input to any check.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .solver import ObstacleProblem, Solution

__all__ = ["solution_figure", "frequency_figure", "blowup_figure", "residual_figure"]


def solution_figure(problem: ObstacleProblem, solution: Solution, path: Path) -> Path:
    grid = problem.grid
    xs, ys = grid.xs, grid.ys
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7.0, 6.5), height_ratios=[2, 1])
    mesh = ax0.pcolormesh(xs, ys, solution.u.values, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax0, label="u")
    contact_x = xs[solution.contact_mask]
    if contact_x.size:
        ax0.plot(contact_x, np.zeros_like(contact_x), "r.", ms=3, label="contact set")
        ax0.legend(loc="upper right")
    ax0.set_xlabel("x")
    ax0.set_ylabel("y")
    ax0.set_title("extension solution (half strip)")
    ax1.plot(xs, solution.u.values[0, :], "k-", lw=1.5, label="u(x, 0)")
    ax1.plot(xs, problem.phi, "r--", lw=1.0, label="obstacle")
    ax1.set_xlabel("x")
    ax1.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def frequency_figure(point_rows: list[dict], path: Path) -> Path:
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for row in point_rows:
        r = np.asarray(row["radii"])
        ax0.semilogx(r, row["phi_values"], "o-", ms=3,
                     label=f"x={row['x']:+.3f} (C0={row['c0']:g})")
        ax1.loglog(r, row["F"], ".-", ms=3)
        ax1.loglog(r, np.asarray(r) ** row["comparison_exponent"], "k:", lw=0.8)
    ax0.set_xlabel("r")
    ax0.set_ylabel("Phi(r)")
    ax0.legend(fontsize=8)
    ax0.set_title("corrected frequency")
    ax1.set_xlabel("r")
    ax1.set_ylabel("F(r)")
    ax1.set_title("sphere mass vs comparison power")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def blowup_figure(point_rows: list[dict], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for row in point_rows:
        rr = [b["r"] for b in row["blowups"]]
        dd = [b["distance"] for b in row["blowups"]]
        ax.loglog(rr, dd, "s-", ms=4, label=f"x={row['x']:+.3f}")
    ax.set_xlabel("r")
    ax.set_ylabel("profile distance (weighted L2, B_1/2)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def residual_figure(solution: Solution, path: Path) -> Path:
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    if solution.residual_trace:
        trace = np.asarray(solution.residual_trace)
        if np.any(trace > 0.0):
            ax0.semilogy(trace, "k-", lw=1)
        else:
            ax0.plot(trace, "k-", lw=1)
    ax0.set_xlabel("sweep")
    ax0.set_ylabel("scaled projected residual")
    en = np.asarray(solution.energy_trace)
    excess = en - en.min()
    ax1.plot(excess, "b-", lw=1)
    if np.any(excess > 0.0):
        ax1.set_yscale("symlog", linthresh=1e-14)
    ax1.set_xlabel("sweep")
    ax1.set_ylabel("energy above minimum")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
