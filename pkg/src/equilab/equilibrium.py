"""Convex equilibrium solvers.

Three problems are solved here, all as finite-dimensional convex programs
over simplex-constrained weight vectors:

- the weighted scalar problem on F with the surface kernel
  log(|1 - Phi(s) Phi(t)| / |s - t|^2) and external field log|Phi|,
- the coupled two-measure problem on (E, F) with interaction matrix
  [[4, -1], [-1, 1]],
- the reduced one-measure problem on E with kernel
  3 log(1/|x - y|) + g_F(x, y) for a single-interval F.

The scalar and reduced problems minimize the discretized quadratic energy
w'Kw + 2f'w (cell-averaged diagonal, midpoint off-diagonal); the primal path
solves the linear saddle system, and a monotone accelerated projected
gradient with an active-set polish guards grids that produce negative
weights.  The coupled problem is a potential-matching collocation system on
the grid nodes, with the same projected-gradient guard on the product of
simplices.  Residuals are always re-measured through the evaluation-route
quadrature of :mod:`equilab.measures` and recorded as observed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergenceError
from .kernels import (
    E_LEFT,
    E_RIGHT,
    IntervalUnion,
    _phi_real,
    green_single_interval,
)
from .measures import DiscreteMeasure, Grid, log_potential, make_grid, neglog_cell_averages

E_INTERVAL = IntervalUnion([(E_LEFT, E_RIGHT)])

MIN_GAP = 1e-6


@dataclass(frozen=True)
class GridParams:
    n: int = 400
    grading: float = 2.0


@dataclass(frozen=True)
class SingularKernel:
    """Kernel smooth(s,t) - sing_coeff * log|s - t| with bounded smooth part."""

    sing_coeff: float
    smooth: object = None          # vectorized (s, t) -> array, or None for zero
    smooth_diag: object = None     # optional diagonal values t -> smooth(t, t)

    def smooth_matrix(self, s, t):
        if self.smooth is None:
            return 0.0
        return self.smooth(s[:, None], t[None, :])


LOG_KERNEL = SingularKernel(sing_coeff=1.0)


def surface_kernel() -> SingularKernel:
    """Kernel of the scalar problem over real points outside E."""

    def smooth(s, t):
        return np.log(np.abs(1.0 - _phi_real(s) * _phi_real(t)))

    return SingularKernel(sing_coeff=2.0, smooth=smooth)


def surface_field(x):
    """External field log|Phi| on the zero sheet over F."""
    return np.log(np.abs(_phi_real(x)))


def reduced_kernel(F: IntervalUnion) -> SingularKernel:
    """Kernel 3 log(1/|x-y|) + g_F(x, y) on E, single-interval F only."""
    gf = green_single_interval(F)

    def smooth(x, y):
        return gf.smooth(x, y)

    return SingularKernel(sing_coeff=4.0, smooth=smooth)


# --------------------------------------------------------------------------
# assembly and evaluation


def assemble_energy_matrix(grid: Grid, kernel: SingularKernel, near_field_exact=False):
    """Galerkin energy matrix: midpoint off-diagonal, exact self-cell diagonal.

    The self-cell double integral of -log|s-t| over a width-h cell is
    h^2 (3/2 - log h); with ``near_field_exact`` the adjacent-cell pair
    integral is exact as well (off by default, midpoint plus grading is the
    reference discretization).
    """
    x = grid.nodes
    h = grid.widths
    D = x[:, None] - x[None, :]
    with np.errstate(divide="ignore"):
        K = -np.log(np.abs(D))
    np.fill_diagonal(K, 1.5 - np.log(h))
    if near_field_exact:
        for i in range(len(x) - 1):
            if abs(grid.cell_right[i] - grid.cell_left[i + 1]) > 1e-14 * max(1.0, abs(x[i])):
                continue
            val = _pair_integral_neglog(
                grid.cell_left[i], grid.cell_right[i], grid.cell_left[i + 1], grid.cell_right[i + 1]
            ) / (h[i] * h[i + 1])
            K[i, i + 1] = val
            K[i + 1, i] = val
    K = kernel.sing_coeff * K
    if kernel.smooth is not None:
        S = kernel.smooth_matrix(x, x)
        if kernel.smooth_diag is not None:
            np.fill_diagonal(S, kernel.smooth_diag(x))
        K = K + S
    return K


def _L2(u):
    # double antiderivative of log|u|, L2'' = log|u|, L2(0) = 0
    out = np.zeros_like(np.asarray(u, dtype=float))
    uu = np.asarray(u, dtype=float)
    nz = uu != 0.0
    out[nz] = uu[nz] ** 2 * (2.0 * np.log(np.abs(uu[nz])) - 3.0) / 4.0
    return out


def _pair_integral_neglog(a1, b1, a2, b2):
    """Exact integral of -log|s - t| over [a1, b1] x [a2, b2], disjoint cells."""
    corners = np.array([b2 - a1, a2 - b1, b2 - b1, a2 - a1])
    vals = _L2(corners)
    return -(vals[0] + vals[1] - vals[2] - vals[3])


def kernel_potential(mu: DiscreteMeasure, kernel: SingularKernel, z):
    """Evaluation-route integral of the kernel against the measure at z."""
    z_in = z
    z = np.atleast_1d(np.asarray(z, dtype=float))
    P = kernel.sing_coeff * neglog_cell_averages(z, mu)
    if kernel.smooth is not None:
        S = kernel.smooth(z[:, None], mu.nodes[None, :])
        if kernel.smooth_diag is not None:
            diag = z[:, None] == mu.nodes[None, :]
            if diag.any():
                zi, cj = np.nonzero(diag)
                S[zi, cj] = kernel.smooth_diag(mu.nodes[cj])
        P = P + S
    out = P @ mu.weights
    return float(out[0]) if np.ndim(z_in) == 0 else out


# --------------------------------------------------------------------------
# solution container


@dataclass(frozen=True)
class EquilibriumSolution:
    measure: DiscreteMeasure
    constants: tuple
    residual_sup: float
    min_density: float
    method: str
    iterations: int = 0
    energy: float = float("nan")
    energy_trace: tuple = field(default=(), repr=False)

    @property
    def constant(self) -> float:
        return self.constants[0]

    def sidecar_dict(self, grid: Grid) -> dict:
        return {
            "constant": float(self.constants[0]),
            "constants": [float(c) for c in self.constants],
            "residual_sup": float(self.residual_sup),
            "min_density": float(self.min_density),
            "method": self.method,
            "grid": {
                "n_per_component": grid.n_per_component,
                "grading": grid.grading,
                "support": [[l, r] for (l, r) in grid.support.intervals],
            },
        }


# --------------------------------------------------------------------------
# simplex machinery


def project_simplex(v, mass=1.0):
    """Euclidean projection onto {w >= 0, sum w = mass}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - mass
    idx = np.arange(1, len(v) + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _kkt_residual(K, f, w):
    g = K @ w + f
    active = w > 0
    c = float(np.sum(w[active] * g[active]) / np.sum(w[active]))
    r_eq = float(np.max(np.abs(g[active] - c)))
    r_in = float(np.max(np.maximum(c - g[~active], 0.0), initial=0.0))
    return max(r_eq, r_in), c


def _energy(K, f, w):
    return float(w @ (K @ w) + 2.0 * f @ w)


def _projected_descent(K, f, w0, mass, tol, max_iter, polish_every=50):
    """Monotone accelerated projected gradient on w'Kw + 2f'w over the simplex.

    Accelerated steps are accepted only when they do not increase the energy,
    so the recorded energy trace is non-increasing by construction.  Step
    sizes come from halving backtracking starting at 1.  Every few iterations
    the equality KKT system on the current support is solved directly; once
    the support is identified that lands exactly on the constrained minimizer
    (first-order methods alone crawl on these ill-conditioned kernels).
    """
    w = project_simplex(np.asarray(w0, dtype=float), mass)
    y = w.copy()
    w_prev = w.copy()
    tk = 1.0
    J = _energy(K, f, w)
    trace = [J]
    it = 0
    for it in range(1, int(max_iter) + 1):
        g = 2.0 * (K @ y + f)
        step = 1.0
        cand = project_simplex(y - step * g, mass)
        Jc = _energy(K, f, cand)
        while Jc > J and step > 1e-20:
            step *= 0.5
            cand = project_simplex(y - step * g, mass)
            Jc = _energy(K, f, cand)
        if Jc <= J:
            w_prev, w = w, cand
            J = Jc
        else:
            w_prev, w = w, w
        trace.append(J)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        y = w + (tk / t_next) * (cand - w) + ((tk - 1.0) / t_next) * (w - w_prev)
        tk = t_next
        res, _ = _kkt_residual(K, f, w)
        if res <= tol:
            return w, it, trace
        if it % polish_every == 0:
            polished, _ = _active_set_polish(K, f, w, mass)
            Jp = _energy(K, f, polished)
            if Jp <= J:
                res_p, _ = _kkt_residual(K, f, polished)
                if res_p <= tol:
                    trace.append(Jp)
                    return polished, it, trace
                if Jp < J:
                    w_prev, w, J = w, polished, Jp
                    y = w.copy()
                    tk = 1.0
                    trace.append(J)
    res, _ = _kkt_residual(K, f, w)
    raise NonConvergenceError(
        f"projected gradient did not reach tolerance {tol:g}; achieved KKT residual {res:.3e}",
        residual=res,
        iterations=it,
    )


def _active_set_polish(K, f, w, mass):
    """Re-solve the equality KKT system on the support found by the iteration."""
    act = w > 0
    if act.sum() == 0:
        return w, None
    Ka = K[np.ix_(act, act)]
    fa = f[act]
    na = int(act.sum())
    A = np.zeros((na + 1, na + 1))
    A[:na, :na] = Ka
    A[:na, na] = 1.0
    A[na, :na] = 1.0
    rhs = np.concatenate([-fa, [mass]])
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return w, None
    wa = sol[:na]
    if np.any(wa < 0):
        return w, None
    out = np.zeros_like(w)
    out[act] = wa
    return out, float(-sol[na])


# --------------------------------------------------------------------------
# solvers


def solve_kernel_equilibrium(
    grid: Grid,
    kernel: SingularKernel,
    fieldfn=None,
    *,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    near_field_exact: bool = False,
    force_fallback: bool = False,
    init=None,
) -> EquilibriumSolution:
    """Unit-mass minimizer of the discretized energy w'Kw + 2f'w.

    Primal path: the saddle system [K 1; 1' 0] (w, -c) = (-f, 1).  Negative
    weights (discretization artifacts on coarse grids) trigger the projected
    gradient fallback followed by an active-set polish.  The returned
    residual is measured through the evaluation-route quadrature at the grid
    nodes, never through the energy matrix itself.
    """
    K = assemble_energy_matrix(grid, kernel, near_field_exact=near_field_exact)
    f = np.zeros(grid.size) if fieldfn is None else np.asarray(fieldfn(grid.nodes), dtype=float)
    n = grid.size

    method = "saddle"
    iterations = 0
    trace = ()
    if not force_fallback:
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = K
        A[:n, n] = 1.0
        A[n, :n] = 1.0
        rhs = np.concatenate([-f, [1.0]])
        try:
            sol = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError(f"saddle system is singular: {exc}") from exc
        w = sol[:n]
        c = float(-sol[n])
    if force_fallback or np.min(w) < -1e-12:
        w0 = np.full(n, 1.0 / n) if init is None else np.asarray(init, dtype=float)
        w, iterations, trace_list = _projected_descent(K, f, w0, 1.0, tol, max_iter)
        polished, c_pol = _active_set_polish(K, f, w, 1.0)
        if c_pol is not None and _energy(K, f, polished) <= _energy(K, f, w) + 1e-15 * abs(_energy(K, f, w)):
            w = polished
            trace_list.append(_energy(K, f, w))
        _, c = _kkt_residual(K, f, w)
        method = "projected"
        trace = tuple(trace_list)

    mu = DiscreteMeasure.from_weights(grid, np.maximum(w, 0.0))
    pe = kernel_potential(mu, kernel, grid.nodes) + f
    residual_sup = float(np.max(np.abs(pe - c)))
    min_density = float(np.min(mu.densities))
    return EquilibriumSolution(
        measure=mu,
        constants=(float(c),),
        residual_sup=residual_sup,
        min_density=min_density,
        method=method,
        iterations=iterations,
        energy=_energy(K, f, np.asarray(mu.weights)),
        energy_trace=trace,
    )


def _check_f(F: IntervalUnion):
    if F.gap_to_unit_interval() < MIN_GAP:
        raise ValueError(
            f"F must be disjoint from [-1, 1] with gap at least {MIN_GAP:g}; "
            f"got gap {F.gap_to_unit_interval():g}"
        )


def solve_scalar(F: IntervalUnion, grid_params: GridParams = GridParams(), **solver_kw) -> EquilibriumSolution:
    """Weighted equilibrium on F: surface kernel with external field log|Phi|.

    At the solution the sheet-1 potential plus field is constant on all of F
    and the density stays strictly positive (full support); both facts are
    re-measured and recorded, not assumed.
    """
    _check_f(F)
    grid = make_grid(F, grid_params.n, grid_params.grading)
    return solve_kernel_equilibrium(grid, surface_kernel(), surface_field, **solver_kw)


def solve_reduced(F: IntervalUnion, grid_params: GridParams = GridParams(), **solver_kw) -> EquilibriumSolution:
    """One-measure reduction on E: kernel 3 log(1/|x-y|) + g_F(x, y), no field.

    Needs a single-interval F (the Green function is in closed form only
    there); the result should reproduce the first component of the coupled
    problem, and its constant the sum of the two coupled constants.
    """
    _check_f(F)
    if F.m != 1:
        raise ValueError("the reduced problem supports a single-interval F only")
    grid = make_grid(E_INTERVAL, grid_params.n, grid_params.grading)
    return solve_kernel_equilibrium(grid, reduced_kernel(F), None, **solver_kw)


def solve_vector(F: IntervalUnion, grid_params: GridParams = GridParams(), *, tol=1e-10, max_iter=100_000):
    """Coupled pair problem: 4 U1 - U2 = w1 on E, -U1 + U2 = w2 on F.

    Solved as a collocation system on the grid nodes (potentials through the
    evaluation-route quadrature), so the recorded residuals measure only the
    linear-algebra error.  Negative weights fall back to a block projected
    gradient on the positive-definite energy with interaction matrix
    [[4, -1], [-1, 1]], then an active-set polish.

    Returns a pair of :class:`EquilibriumSolution`, for the E and F measures.
    """
    _check_f(F)
    ge = make_grid(E_INTERVAL, grid_params.n, grid_params.grading)
    gf = make_grid(F, grid_params.n, grid_params.grading)
    me = DiscreteMeasure.from_weights(ge, np.full(ge.size, 1.0 / ge.size))
    mf = DiscreteMeasure.from_weights(gf, np.full(gf.size, 1.0 / gf.size))
    QEE = neglog_cell_averages(ge.nodes, me)
    QEF = neglog_cell_averages(ge.nodes, mf)
    QFE = neglog_cell_averages(gf.nodes, me)
    QFF = neglog_cell_averages(gf.nodes, mf)
    nE, nF = ge.size, gf.size
    N = nE + nF + 2
    A = np.zeros((N, N))
    A[:nE, :nE] = 4.0 * QEE
    A[:nE, nE : nE + nF] = -QEF
    A[:nE, nE + nF] = -1.0
    A[nE : nE + nF, :nE] = -QFE
    A[nE : nE + nF, nE : nE + nF] = QFF
    A[nE : nE + nF, nE + nF + 1] = -1.0
    A[nE + nF, :nE] = 1.0
    A[nE + nF + 1, nE : nE + nF] = 1.0
    rhs = np.zeros(N)
    rhs[nE + nF] = 1.0
    rhs[nE + nF + 1] = 1.0
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NonConvergenceError(f"collocation system is singular: {exc}") from exc
    u, v = sol[:nE], sol[nE : nE + nF]
    w1, w2 = float(sol[nE + nF]), float(sol[nE + nF + 1])
    method = "collocation"
    iterations = 0

    if min(u.min(), v.min()) < -1e-12:
        u, v, iterations = _vector_fallback(QEE, QEF, QFE, QFF, nE, nF, tol, max_iter)
        w1 = float(np.mean(4.0 * (QEE @ u) - QEF @ v))
        w2 = float(np.mean(-(QFE @ u) + QFF @ v))
        method = "projected"

    lam_e = DiscreteMeasure.from_weights(ge, np.maximum(u, 0.0))
    lam_f = DiscreteMeasure.from_weights(gf, np.maximum(v, 0.0))
    r1 = float(np.max(np.abs(4.0 * log_potential(lam_e, ge.nodes) - log_potential(lam_f, ge.nodes) - w1)))
    r2 = float(np.max(np.abs(-log_potential(lam_e, gf.nodes) + log_potential(lam_f, gf.nodes) - w2)))
    sol_e = EquilibriumSolution(
        measure=lam_e,
        constants=(w1, w2),
        residual_sup=r1,
        min_density=float(np.min(lam_e.densities)),
        method=method,
        iterations=iterations,
    )
    sol_f = EquilibriumSolution(
        measure=lam_f,
        constants=(w2, w1),
        residual_sup=r2,
        min_density=float(np.min(lam_f.densities)),
        method=method,
        iterations=iterations,
    )
    return sol_e, sol_f


def _vector_fallback(QEE, QEF, QFE, QFF, nE, nF, tol, max_iter):
    """Block projected gradient on the coupled energy over a product of simplices.

    Uses the Galerkin symmetrizations of the collocation blocks; the energy
    4 u'Au - 2 u'Bv + v'Cv is positive definite on the constraint set because
    the interaction matrix [[4, -1], [-1, 1]] is.
    """
    AEE = 0.5 * (QEE + QEE.T)
    AFF = 0.5 * (QFF + QFF.T)
    B = 0.5 * (QEF + QFE.T)

    def energy(u, v):
        return float(4.0 * u @ (AEE @ u) - 2.0 * u @ (B @ v) + v @ (AFF @ v))

    u = np.full(nE, 1.0 / nE)
    v = np.full(nF, 1.0 / nF)
    J = energy(u, v)
    it = 0
    for it in range(1, int(max_iter) + 1):
        gu = 8.0 * (AEE @ u) - 2.0 * (B @ v)
        gv = 2.0 * (AFF @ v) - 2.0 * (B.T @ u)
        step = 1.0
        while step > 1e-20:
            uc = project_simplex(u - step * gu, 1.0)
            vc = project_simplex(v - step * gv, 1.0)
            Jc = energy(uc, vc)
            if Jc <= J:
                break
            step *= 0.5
        moved = max(np.max(np.abs(uc - u)), np.max(np.abs(vc - v)))
        u, v, J = uc, vc, Jc
        if moved <= tol:
            return u, v, it
    raise NonConvergenceError(
        f"coupled projected gradient did not converge; last step {moved:.3e}",
        residual=moved,
        iterations=it,
    )
