"""Balayage operators onto [-1, 1] and onto general interval unions.

Balayage sweeps a measure out of a domain onto its boundary while raising
the logarithmic potential by a constant on the swept-onto set.  Two routes
are implemented: the closed form for a point mass swept onto E = [-1, 1]
(density sqrt(a^2-1) / (pi |x-a| sqrt(1-x^2)), with exact cell masses from
the arctan antiderivative), and a potential-matching linear solve for
arbitrary discrete sources and targets.  The closed form doubles as the test
oracle for the numeric route.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError
from .kernels import E_LEFT, E_RIGHT, IntervalUnion, green_e_at_infinity
from .measures import DiscreteMeasure, Grid, log_potential, neglog_cell_averages
from .equilibrium import project_simplex


@dataclass(frozen=True)
class BalayageResult:
    """Swept measure plus the additive constant c in U_swept = U_source + c."""

    measure: DiscreteMeasure
    shift_constant: float
    residual_sup: float = 0.0


def _require_e_grid(grid: Grid):
    hull = grid.support.hull
    if grid.support.m != 1 or abs(hull[0] - E_LEFT) > 1e-12 or abs(hull[1] - E_RIGHT) > 1e-12:
        raise ValueError("grid must cover exactly [-1, 1]")


def chebyshev_measure(grid: Grid) -> DiscreteMeasure:
    """Unit arcsine measure dx / (pi sqrt(1-x^2)) with exact cell masses."""
    _require_e_grid(grid)
    w = (np.arcsin(grid.cell_right) - np.arcsin(grid.cell_left)) / np.pi
    return DiscreteMeasure.from_weights(grid, w)


def point_balayage_density(a: float, x):
    """Density at x in (-1, 1) of the balayage of a unit point mass at a, |a| > 1."""
    x = np.asarray(x, dtype=float)
    out = np.sqrt(a * a - 1.0) / (np.pi * np.abs(x - a) * np.sqrt(1.0 - x * x))
    return out if out.shape else float(out)


def _point_cdf_from_left(a: float, x):
    """Mass of [-1, x] under the point balayage, a > 1, via the arctan antiderivative."""
    k = np.sqrt((a + 1.0) / (a - 1.0))
    theta = np.arccos(np.clip(x, -1.0, 1.0))
    return 1.0 - 2.0 * np.arctan(k * np.tan(theta / 2.0)) / np.pi


def balayage_point_to_e(a: float, grid: Grid) -> BalayageResult:
    """Closed-form balayage of the unit point mass at a onto E = [-1, 1].

    Cell masses are exact; the shift constant is the Green function of E at
    infinity evaluated at a, so the potential identity
    U_swept = -log|. - a| + log|Phi(a)| holds on E.
    """
    if abs(a) <= 1.0:
        raise ValueError("point must lie outside [-1, 1]")
    _require_e_grid(grid)
    if a > 1.0:
        w = _point_cdf_from_left(a, grid.cell_right) - _point_cdf_from_left(a, grid.cell_left)
    else:
        w = _point_cdf_from_left(-a, -grid.cell_left) - _point_cdf_from_left(-a, -grid.cell_right)
    mu = DiscreteMeasure.from_weights(grid, w)
    return BalayageResult(measure=mu, shift_constant=float(green_e_at_infinity(a)))


def balayage_numeric(
    mu: DiscreteMeasure,
    target: Grid,
    *,
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> BalayageResult:
    """Sweep a discrete measure onto the target grid by potential matching.

    Solves for nonnegative target weights b and a constant c with
    U_b(x_i) = U_mu(x_i) + c at every target node and total mass preserved.
    A source already supported on the target set is returned unchanged with
    c = 0; a partially overlapping source is rejected.
    """
    rel = _support_relation(mu.support, target.support)
    if rel == "equal":
        return BalayageResult(measure=mu, shift_constant=0.0)
    if rel == "overlap":
        raise ValueError("source support must be disjoint from the target (or equal to it)")

    mass = mu.mass
    tgt = DiscreteMeasure.from_weights(target, np.full(target.size, mass / target.size))
    P = neglog_cell_averages(target.nodes, tgt)
    rhs_u = neglog_cell_averages(target.nodes, mu) @ mu.weights
    n = target.size
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = P
    A[:n, n] = -1.0
    A[n, :n] = 1.0
    rhs = np.concatenate([rhs_u, [mass]])
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NonConvergenceError(f"balayage system is singular: {exc}") from exc
    b, c = sol[:n], float(sol[n])

    if b.min() < -1e-8:
        b, c = _projected_lsq(P, rhs_u, mass, tol, max_iter)

    swept = DiscreteMeasure.from_weights(target, np.maximum(b, 0.0))
    resid = float(np.max(np.abs(log_potential(swept, target.nodes) - rhs_u - c)))
    return BalayageResult(measure=swept, shift_constant=c, residual_sup=resid)


def _support_relation(a: IntervalUnion, b: IntervalUnion) -> str:
    if a.intervals == b.intervals:
        return "equal"
    for (l1, r1) in a.intervals:
        for (l2, r2) in b.intervals:
            if max(l1, l2) <= min(r1, r2):
                return "overlap"
    return "disjoint"


def _projected_lsq(P, rhs_u, mass, tol, max_iter):
    """Least-squares fallback: min over the simplex of ||P b - c - rhs_u||^2, c free."""
    n = P.shape[0]
    b = np.full(n, mass / n)
    L = np.linalg.norm(P, 2) ** 2 * 4.0
    last = np.inf
    for it in range(1, int(max_iter) + 1):
        r = P @ b - rhs_u
        c = float(np.mean(r))
        g = 2.0 * P.T @ (r - c)
        b_new = project_simplex(b - g / L, mass)
        moved = np.max(np.abs(b_new - b))
        b = b_new
        if moved <= tol and moved >= last - tol:
            r = P @ b - rhs_u
            return b, float(np.mean(r))
        last = moved
    raise NonConvergenceError(
        f"projected balayage fallback did not converge; last step {moved:.3e}",
        residual=moved,
        iterations=it,
    )


def reconstruct_e_measure(lam: DiscreteMeasure, e_grid: Grid) -> DiscreteMeasure:
    """First coupled measure from the F measure: (balayage onto E + 3 tau_E) / 4."""
    if abs(lam.mass - 1.0) > 1e-8:
        raise ValueError("expects a unit measure on F")
    swept = balayage_numeric(lam, e_grid).measure
    tau = chebyshev_measure(e_grid)
    w = (swept.weights + 3.0 * tau.weights) / 4.0
    return DiscreteMeasure.from_weights(e_grid, w)
