"""Verification-harness tests at reduced grid scale."""

import pytest

from equilab.equilibrium import GridParams, solve_scalar, solve_vector
from equilab.hermite_pade import arcsine_sigma
from equilab.kernels import IntervalUnion
from equilab.verify import (
    Tolerances,
    VerificationReport,
    verify_charge_slopes,
    verify_equivalence,
    verify_mixed_potential,
    verify_positivity,
    verify_zero_distribution,
)

F23 = IntervalUnion([(2.0, 3.0)])
FSYM = IntervalUnion([(-3.0, -2.0), (2.0, 3.0)])
GP = GridParams(n=120, grading=2.0)
TOL = Tolerances().scaled(120)


@pytest.fixture(scope="module")
def solutions():
    scalar = solve_scalar(F23, GP)
    sol_e, sol_f = solve_vector(F23, GP)
    return scalar, sol_e, sol_f


class TestEquivalence:
    def test_single_interval(self):
        rep = verify_equivalence(F23, GP, TOL)
        assert rep.all_passed
        ids = {c.check_id for c in rep.checks}
        assert "equivalence.scalar_min_density" in ids
        assert "equivalence.scalar_residual_fine" in ids
        assert "equivalence.ks_scalar_vs_coupled_f" in ids
        assert "equivalence.ks_scalar_vs_swept_e" in ids
        assert "equivalence.ks_coupled_e_vs_reconstruction" in ids
        assert "equivalence.ks_reduced_vs_coupled_e" in ids
        assert "equivalence.reduced_constant_consistency" in ids

    def test_symmetric_f(self):
        rep = verify_equivalence(FSYM, GP, TOL)
        assert rep.all_passed
        by_id = {c.check_id: c for c in rep.checks}
        assert by_id["equivalence.symmetry_e"].status == "pass"
        # reduced route is single-interval only: recorded as skipped
        assert by_id["equivalence.ks_reduced_vs_coupled_e"].status == "skipped"
        assert by_id["equivalence.reduced_constant_consistency"].status == "skipped"

    def test_degenerate_f_rejected(self):
        with pytest.raises(ValueError):
            verify_equivalence(IntervalUnion([(0.5, 2.0)]), GP, TOL)

    def test_cross_route_closure(self, solutions):
        # three routes to the E measure agree pairwise within 2x the KS bound
        from equilab.balayage import reconstruct_e_measure
        from equilab.equilibrium import E_INTERVAL, solve_reduced
        from equilab.measures import ks_distance, make_grid

        scalar, sol_e, _ = solutions
        reduced = solve_reduced(F23, GP)
        e_grid = make_grid(E_INTERVAL, GP.n, GP.grading)
        recon = reconstruct_e_measure(scalar.measure, e_grid)
        pairs = [
            ks_distance(sol_e.measure, reduced.measure),
            ks_distance(sol_e.measure, recon),
            ks_distance(reduced.measure, recon),
        ]
        assert max(pairs) <= 2 * TOL.ks


class TestMixedPotential:
    def test_single_interval(self, solutions):
        scalar, sol_e, _ = solutions
        rep = verify_mixed_potential(scalar.measure, sol_e.measure, TOL)
        assert rep.all_passed
        by_id = {c.check_id: c for c in rep.checks}
        assert by_id["mixed.affine_identity"].value <= 1e-10

    def test_multi_interval_skips_e_side(self):
        scalar = solve_scalar(FSYM, GP)
        sol_e, _ = solve_vector(FSYM, GP)
        rep = verify_mixed_potential(scalar.measure, sol_e.measure, TOL)
        by_id = {c.check_id: c for c in rep.checks}
        assert by_id["mixed.constancy_on_e"].status == "skipped"
        assert by_id["mixed.constancy_on_f"].status == "pass"
        assert rep.all_passed  # skips do not fail the report


class TestPositivity:
    def test_passes(self, solutions):
        scalar, _, _ = solutions
        rep = verify_positivity(scalar.measure, samples=300, seed=5)
        assert rep.all_passed

    def test_deterministic_given_seed(self, solutions):
        scalar, _, _ = solutions
        a = verify_positivity(scalar.measure, samples=100, seed=42)
        b = verify_positivity(scalar.measure, samples=100, seed=42)
        assert a.to_json_dict() == b.to_json_dict()


class TestSlopes:
    def test_passes(self, solutions):
        scalar, _, _ = solutions
        rep = verify_charge_slopes(scalar.measure)
        assert rep.all_passed


class TestZeroDistribution:
    def test_small_orders(self):
        sigma = arcsine_sigma(F23)
        rep = verify_zero_distribution(
            sigma, [2, 4], GridParams(n=100, grading=2.0), 192, ks_final=0.5
        )
        assert rep.all_passed
        assert "ks_sequence" in rep.provenance
        assert set(rep.provenance["ks_sequence"]) == {"2", "4"}

    def test_n_list_must_increase(self):
        with pytest.raises(ValueError):
            verify_zero_distribution(arcsine_sigma(F23), [4, 2], GP, 192)


class TestReportStructure:
    def test_no_silent_skips(self, solutions):
        scalar = solve_scalar(FSYM, GP)
        sol_e, _ = solve_vector(FSYM, GP)
        rep = verify_mixed_potential(scalar.measure, sol_e.measure, TOL)
        for c in rep.checks:
            assert c.status in ("pass", "fail", "skipped")
            if c.status == "skipped":
                assert c.note

    def test_markdown_rendering(self, solutions):
        scalar, sol_e, _ = solutions
        rep = verify_mixed_potential(scalar.measure, sol_e.measure, TOL)
        md = rep.to_markdown()
        assert "| mixed.affine_identity |" in md
        assert md.startswith("## mixed-potential")

    def test_json_shape(self, solutions):
        scalar, sol_e, _ = solutions
        rep = verify_mixed_potential(scalar.measure, sol_e.measure, TOL)
        d = rep.to_json_dict()
        assert d["name"] == "mixed-potential"
        assert isinstance(d["all_passed"], bool)
        assert all({"check_id", "value", "tolerance", "status", "note"} <= set(c) for c in d["checks"])

    def test_failed_check_recorded(self):
        rep = VerificationReport(name="x")
        rep.add_bound("x.too_big", 1.0, 0.5)
        assert not rep.all_passed
        assert rep.checks[0].status == "fail"
