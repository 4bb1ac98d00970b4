"""Verification harness: every claim re-measured by an independent route.

Each verifier returns a :class:`VerificationReport` listing every configured
check with its measured value, tolerance and status; skipped checks are
recorded as skipped with a reason, never silently dropped.  Reports carry a
full configuration echo and are deterministic for a fixed seed; wall-clock
timings live in a separate structure so the serialized reports stay
byte-stable across runs.

Checks implemented:

- equivalence: the scalar solution on F against the coupled pair on (E, F),
  through distribution distances, the balayage routes in both directions,
  the reconstruction (swept measure + 3 tau_E)/4, and for single-interval F
  the reduced one-measure route with its constant consistency.
- mixed potential: the mixed Green-logarithmic potential
  3 U + G_E + 3 g_E(., infinity) is constant on F, is nodewise an affine
  image of the sheet-1 surface functional (pure algebra at quadrature
  level), and its E-side counterpart 3 U_1 + G_F is constant on E.
- positivity: the sheet-1 comparison function (Green potential of the
  complement of E plus 3 log|Phi|) is positive off the branch curve,
  vanishes at the curve, and diverges like 3 log|z|.
- zero distribution: real zeros of Q2 stay in the hull of F, have full
  count, and their normalized counting measures approach the scalar
  equilibrium measure in KS distance along increasing orders.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .balayage import balayage_numeric, reconstruct_e_measure
from .equilibrium import (
    E_INTERVAL,
    GridParams,
    solve_reduced,
    solve_scalar,
    solve_vector,
)
from .errors import EquilabError
from .hermite_pade import (
    MarkovSpec,
    counting_measure,
    solve_with_escalation,
)
from .kernels import IntervalUnion, green_e_at_infinity
from .measures import (
    DiscreteMeasure,
    green_potential_e,
    ks_distance,
    log_potential,
    make_grid,
    rs_potential_sheet,
    surface_functional,
)


# --------------------------------------------------------------------------
# report plumbing


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    value: float
    tolerance: float
    status: str  # "pass" | "fail" | "skipped"
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass
class VerificationReport:
    name: str
    checks: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def add(self, check_id, value, tolerance, ok, note=""):
        self.checks.append(
            CheckResult(
                check_id=check_id,
                value=float(value),
                tolerance=float(tolerance),
                status="pass" if ok else "fail",
                note=note,
            )
        )

    def add_bound(self, check_id, value, tolerance, note=""):
        self.add(check_id, value, tolerance, float(value) <= float(tolerance), note)

    def skip(self, check_id, reason):
        self.checks.append(
            CheckResult(check_id=check_id, value=float("nan"), tolerance=float("nan"),
                        status="skipped", note=reason)
        )

    @property
    def all_passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "all_passed": self.all_passed,
            "checks": [
                {
                    "check_id": c.check_id,
                    "value": None if np.isnan(c.value) else float(c.value),
                    "tolerance": None if np.isnan(c.tolerance) else float(c.tolerance),
                    "status": c.status,
                    "note": c.note,
                }
                for c in self.checks
            ],
            "provenance": self.provenance,
        }

    def to_markdown(self) -> str:
        lines = [
            f"## {self.name}",
            "",
            "| check | value | tolerance | status |",
            "|---|---|---|---|",
        ]
        for c in self.checks:
            val = "" if np.isnan(c.value) else f"{c.value:.6g}"
            tol = "" if np.isnan(c.tolerance) else f"{c.tolerance:.6g}"
            note = f" ({c.note})" if c.note else ""
            lines.append(f"| {c.check_id} | {val} | {tol} | {c.status}{note} |")
        lines.append("")
        return "\n".join(lines)


@dataclass(frozen=True)
class Tolerances:
    """Distribution and residual tolerances, calibrated at 400 nodes.

    The underlying identities are exact; these bounds encode discretization
    error only and scale like 1/n with the grid.
    """

    ks: float = 5e-3
    residual_rel: float = 1e-3
    constancy: float = 1e-2
    identity: float = 1e-10
    constant_agreement: float = 2e-2
    reference_n: int = 400

    def scaled(self, n: int) -> "Tolerances":
        s = self.reference_n / n
        return Tolerances(
            ks=self.ks * s,
            residual_rel=self.residual_rel * s,
            constancy=self.constancy * s,
            identity=self.identity,
            constant_agreement=self.constant_agreement * s,
            reference_n=self.reference_n,
        )


def _echo_grid(gp: GridParams):
    return {"n": gp.n, "grading": gp.grading}


# --------------------------------------------------------------------------
# equivalence of the scalar and coupled problems


def verify_equivalence(
    F: IntervalUnion,
    grid_params: GridParams = GridParams(),
    tolerances: Tolerances = Tolerances(),
) -> VerificationReport:
    """Scalar-versus-coupled equivalence suite on a given F."""
    if F.gap_to_unit_interval() < 1e-6:
        raise ValueError(
            "F violates the disjointness invariant: it must stay clear of [-1, 1]"
        )
    t0 = time.perf_counter()
    rep = VerificationReport(
        name="equivalence",
        provenance={
            "F": [[l, r] for (l, r) in F.intervals],
            "grid": _echo_grid(grid_params),
            "tolerances": {"ks": tolerances.ks, "residual_rel": tolerances.residual_rel},
        },
    )
    try:
        scalar = solve_scalar(F, grid_params)
        sol_e, sol_f = solve_vector(F, grid_params)
    except EquilabError as exc:
        rep.add("equivalence.solver", float("inf"), 0.0, False, f"solver failure: {exc}")
        rep.timings["total"] = time.perf_counter() - t0
        return rep
    lam = scalar.measure
    w_f = scalar.constant

    rep.add("equivalence.scalar_min_density", scalar.min_density, 0.0,
            scalar.min_density > 0.0, "full support: strictly positive density")

    fine = make_grid(F, 4 * grid_params.n, grid_params.grading)
    res_fine = float(np.max(np.abs(surface_functional(lam, fine.nodes) - w_f)))
    rep.add_bound("equivalence.scalar_residual_fine", res_fine,
                  tolerances.residual_rel * max(1.0, abs(w_f)),
                  "sup of |P + V - w_F| on a 4x finer grid")

    rep.add_bound("equivalence.ks_scalar_vs_coupled_f", ks_distance(lam, sol_f.measure),
                  tolerances.ks)

    swept_f = balayage_numeric(sol_e.measure, make_grid(F, grid_params.n, grid_params.grading))
    rep.add_bound("equivalence.ks_scalar_vs_swept_e", ks_distance(lam, swept_f.measure),
                  tolerances.ks, "F measure vs balayage of the E measure onto F")

    e_grid = make_grid(E_INTERVAL, grid_params.n, grid_params.grading)
    recon = reconstruct_e_measure(lam, e_grid)
    rep.add_bound("equivalence.ks_coupled_e_vs_reconstruction",
                  ks_distance(sol_e.measure, recon), tolerances.ks,
                  "E measure vs (swept F measure + 3 tau_E)/4")

    if F.m == 1:
        reduced = solve_reduced(F, grid_params)
        rep.add_bound("equivalence.ks_reduced_vs_coupled_e",
                      ks_distance(reduced.measure, sol_e.measure), tolerances.ks)
        w_e = reduced.constant
        w12 = sol_e.constants[0] + sol_e.constants[1]
        rep.add_bound("equivalence.reduced_constant_consistency", abs(w_e - w12),
                      tolerances.constant_agreement * max(1.0, abs(w_e)),
                      "reduced constant vs w1 + w2 from the coupled solve")
    else:
        rep.skip("equivalence.ks_reduced_vs_coupled_e",
                 "reduced route needs a single-interval F")
        rep.skip("equivalence.reduced_constant_consistency",
                 "reduced route needs a single-interval F")

    if F.is_symmetric():
        sym = float(np.max(np.abs(sol_e.measure.weights - sol_e.measure.weights[::-1])))
        rep.add_bound("equivalence.symmetry_e", sym, 1e-10,
                      "E weights invariant under x -> -x for symmetric F")

    rep.provenance["constants"] = {
        "w_F": w_f,
        "w1": sol_e.constants[0],
        "w2": sol_f.constants[0],
    }
    rep.timings["total"] = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# mixed Green-logarithmic potential


def verify_mixed_potential(
    lam: DiscreteMeasure,
    lam_e: DiscreteMeasure,
    tolerances: Tolerances = Tolerances(),
) -> VerificationReport:
    """Constancy chain of the mixed potential 3U + G_E + 3 g_E(., infinity).

    ``lam`` is the unit equilibrium measure on F (scalar route), ``lam_e``
    the first coupled measure on E.
    """
    t0 = time.perf_counter()
    rep = VerificationReport(
        name="mixed-potential",
        provenance={
            "F": [[l, r] for (l, r) in lam.support.intervals],
            "n_f": len(lam.nodes),
            "n_e": len(lam_e.nodes),
        },
    )
    z = lam.nodes
    v2 = (
        3.0 * log_potential(lam, z)
        + green_potential_e(lam, z)
        + 3.0 * green_e_at_infinity(z)
    )
    pv = surface_functional(lam, z)
    ident = v2 - 2.0 * pv
    rep.add_bound("mixed.affine_identity", float(np.max(np.abs(ident - ident.mean()))),
                  tolerances.identity,
                  "mixed potential minus twice the surface functional is constant "
                  "nodewise at quadrature level")
    rep.add_bound("mixed.constancy_on_f", float(v2.max() - v2.min()), tolerances.constancy,
                  "sup - inf of the mixed potential over F nodes")

    if lam.support.m == 1:
        from .kernels import green_single_interval
        from .equilibrium import kernel_potential, SingularKernel

        x = lam_e.nodes
        u1 = log_potential(lam_e, x)
        gf = green_single_interval(lam.support)
        g1f = kernel_potential(
            lam_e, SingularKernel(sing_coeff=1.0, smooth=gf.smooth), x
        )
        g2e = green_potential_e(lam, x)
        ge_inf = green_e_at_infinity(x)
        v42 = 3.0 * u1 + g1f + g2e + 3.0 * ge_inf
        rep.add_bound("mixed.constancy_on_e", float(v42.max() - v42.min()),
                      tolerances.constancy,
                      "3 U_1 + G_F constant on E (Green terms vanish there)")
        # swapping U_2 for U_1 on F raises the plateau by 3x the second
        # coupled constant, so the F-side constant exceeds the E-side by 3 w2
        w2 = float(np.mean(log_potential(lam, z) - log_potential(lam_e, z)))
        rep.add_bound("mixed.constant_agreement",
                      float(abs(v2.mean() - 3.0 * w2 - v42.mean())),
                      tolerances.constant_agreement,
                      "F-side constant minus 3 w2 equals the E-side constant")
        rep.provenance["constants"] = {"mixed_on_f": float(v2.mean()),
                                       "mixed_on_e": float(v42.mean()),
                                       "w2_estimate": w2}
    else:
        rep.skip("mixed.constancy_on_e", "E-side chain needs a single-interval F")
        rep.skip("mixed.constant_agreement", "E-side chain needs a single-interval F")

    rep.timings["total"] = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# sheet-1 positivity


def sheet1_comparison(lam: DiscreteMeasure, z):
    """v(z^(1)) = G_E-potential of lam at z plus 3 log|Phi(z)|, real z outside E.

    Positive off the branch curve, zero on it, divergent like 3 log|z|.
    """
    return green_potential_e(lam, z) + 3.0 * green_e_at_infinity(z)


def verify_positivity(
    lam: DiscreteMeasure,
    samples: int = 1000,
    seed: int = 20240801,
    slope_rel_tol: float = 0.05,
) -> VerificationReport:
    """Positivity and growth of the sheet-1 comparison function."""
    t0 = time.perf_counter()
    rep = VerificationReport(
        name="positivity",
        provenance={"samples": samples, "seed": seed,
                    "F": [[l, r] for (l, r) in lam.support.intervals]},
    )
    rng = np.random.default_rng(seed)
    mag = 10.0 ** rng.uniform(np.log10(1.01), 2.0, size=samples)
    sign = np.where(rng.random(samples) < 0.5, -1.0, 1.0)
    z = sign * mag
    vals = sheet1_comparison(lam, z)
    rep.add("positivity.min_over_samples", float(vals.min()), 0.0, bool(vals.min() > 0.0),
            "strictly positive at every sheet-1 sample")

    near = float(sheet1_comparison(lam, 1.0 + 1e-6))
    rep.add_bound("positivity.boundary_vanishing", near, 1e-2,
                  "value at z = 1 + 1e-6")

    zs = np.geomspace(1e4, 1e6, 25)
    slope = float(np.polyfit(np.log(zs), sheet1_comparison(lam, zs), 1)[0])
    rep.add_bound("positivity.log_slope", abs(slope - 3.0), 3.0 * slope_rel_tol,
                  "growth rate against log|z| fitted over z in [1e4, 1e6]")

    far = float(sheet1_comparison(lam, 1e6))
    rep.add("positivity.far_lower_bound", far, 3.0 * float(np.log(1e6)),
            far >= 3.0 * np.log(1e6), "value at 1e6 at least 3 log(1e6)")

    rep.timings["total"] = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# slopes of the surface potential (net charge seen from infinity)


def verify_charge_slopes(lam: DiscreteMeasure, rel_tol: float = 1e-3) -> VerificationReport:
    """Fitted growth rates of the surface potential on the two sheets."""
    t0 = time.perf_counter()
    rep = VerificationReport(
        name="charge-slopes",
        provenance={"F": [[l, r] for (l, r) in lam.support.intervals]},
    )
    zs = np.geomspace(1e3, 1e6, 25)
    s0 = float(np.polyfit(np.log(zs), rs_potential_sheet(lam, zs, 0), 1)[0])
    s1 = float(np.polyfit(np.log(zs), rs_potential_sheet(lam, zs, 1), 1)[0])
    rep.add_bound("slopes.sheet0", abs(s0 + 2.0), rel_tol, "sheet-0 rate is -2")
    rep.add_bound("slopes.sheet1", abs(s1 + 1.0), rel_tol, "sheet-1 rate is -1")
    rep.timings["total"] = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# zero distribution of Q2


def verify_zero_distribution(
    sigma: MarkovSpec,
    n_list,
    grid_params: GridParams = GridParams(),
    precision_bits: int = 512,
    *,
    ks_band: float = 0.10,
    ks_final: float = 0.08,
) -> VerificationReport:
    """Hull containment, degree, and KS decay of normalized zero counting measures.

    The comparison measure is the scalar equilibrium solution on the support
    of sigma.  The 10% non-increase band on the KS sequence is an artifact
    policy for desk scale, flagged as such in the provenance, not a claim
    about rates.
    """
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    t0 = time.perf_counter()
    rep = VerificationReport(
        name="zero-distribution",
        provenance={
            "F": [[l, r] for (l, r) in sigma.support.intervals],
            "rule": sigma.rule,
            "n_list": n_list,
            "precision_bits": precision_bits,
            "grid": _echo_grid(grid_params),
            "ks_band_policy": "non-increase within 10% per step; desk-scale policy",
        },
    )
    scalar = solve_scalar(sigma.support, grid_params)
    lam = scalar.measure
    hull = sigma.support.hull
    ks_seq = {}
    precisions = {}
    for n in n_list:
        try:
            sol, zeros = solve_with_escalation(n, sigma, precision_bits, hull=hull)
        except EquilabError as exc:
            rep.add(f"zeros.order_{n}", float("inf"), 0.0, False, f"failure: {exc}")
            continue
        precisions[n] = sol.precision_bits
        zf = [float(z) for z in zeros]
        excursion = max(0.0, hull[0] - min(zf), max(zf) - hull[1])
        rep.add_bound(f"zeros.hull_containment_n{n}", excursion, 1e-9,
                      f"max excursion outside [{hull[0]}, {hull[1]}]")
        rep.add(f"zeros.degree_n{n}", sol.degree_q2, n, sol.degree_q2 == n,
                "degree of Q2 equals the order")
        rep.add(f"zeros.count_n{n}", len(zeros), n, len(zeros) == n,
                "real zero count equals the degree")
        ks_seq[n] = ks_distance(counting_measure(zeros, n), lam)

    if len(ks_seq) == len(n_list):
        ratios = [
            ks_seq[b] / ks_seq[a] for a, b in zip(n_list, n_list[1:])
        ]
        worst = max(ratios) if ratios else 0.0
        rep.add_bound("zeros.ks_non_increasing", worst, 1.0 + ks_band,
                      "max step ratio of the KS sequence")
        rep.add_bound("zeros.ks_final", ks_seq[n_list[-1]], ks_final)
    else:
        rep.skip("zeros.ks_non_increasing", "incomplete KS sequence after failures")
        rep.skip("zeros.ks_final", "incomplete KS sequence after failures")

    rep.provenance["ks_sequence"] = {str(n): float(v) for n, v in ks_seq.items()}
    rep.provenance["effective_precision_bits"] = {str(n): p for n, p in precisions.items()}
    rep.timings["total"] = time.perf_counter() - t0
    return rep
