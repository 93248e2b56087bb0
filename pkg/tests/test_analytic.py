"""Tests for the closed-form family curves and graded-symmetry utilities."""

import numpy as np
import pytest

from tripletmur.analytic import (
    GradedSymmetry,
    delta_orthogonal,
    delta_perp,
    delta_y,
    detect_graded_symmetries,
    symmetrize,
    threshold_angles_perp,
    threshold_angles_y,
)
from tripletmur.errors import InvalidInputError, InvalidSymmetryError, PreconditionError
from tripletmur.incompatibility import analyze
from tripletmur.qubit import BinaryMeasurement, Triplet, worst_case_error
from tripletmur.solver import solve_bloch_form

SQ2 = np.sqrt(2.0)
SQ3 = np.sqrt(3.0)


def orthogonal_triplet(g_deg=0.0):
    c = np.cos(np.radians(g_deg))
    return Triplet.from_vectors((0, 0, c), (0, c, 0), (c, 0, 0))


def perp_triplet(g_deg):
    c, s = np.cos(np.radians(g_deg)), np.sin(np.radians(g_deg))
    return Triplet.from_vectors((c, s, 0), (c, -s, 0), (0, 0, 1))


def y_triplet(g_deg):
    c, s = np.cos(np.radians(g_deg)), np.sin(np.radians(g_deg))
    arms = [(-0.5, SQ3 / 2, 0), (-0.5, -SQ3 / 2, 0), (1, 0, 0)]
    return Triplet.from_vectors(
        *(np.array([0.0, 0.0, c]) + s * np.array(e) for e in arms)
    )


def action_residual(sym, triplet):
    m = triplet.bloch_vectors()
    return max(
        float(
            np.linalg.norm(
                sym.reflection @ m[j] - sym.signs[j] * m[sym.permutation[j]]
            )
        )
        for j in range(3)
    )


class TestDeltaOrthogonal:
    def test_maximal_value(self):
        np.testing.assert_allclose(delta_orthogonal(0.0), 2.0 * (SQ3 - 1.0))

    def test_compatibility_root(self):
        np.testing.assert_allclose(
            delta_orthogonal(np.degrees(np.arccos(1.0 / SQ3))), 0.0, atol=1e-12
        )

    def test_clamped_beyond_root(self):
        assert delta_orthogonal(60.0) == 0.0
        assert delta_orthogonal(90.0) == 0.0

    def test_domain_checked(self):
        with pytest.raises(PreconditionError, match=r"\[0, 90\]"):
            delta_orthogonal(-1.0)
        with pytest.raises(PreconditionError, match=r"\[0, 90\]"):
            delta_orthogonal(90.5)

    def test_matches_solver(self):
        for g in range(0, 51, 10):
            value = solve_bloch_form(orthogonal_triplet(float(g))).value
            np.testing.assert_allclose(delta_orthogonal(float(g)), value, atol=1e-5)


class TestThresholds:
    def test_perp_thresholds_near_published(self):
        gamma0, gamma1 = threshold_angles_perp()
        assert abs(gamma0 - 32.77) <= 0.05
        assert abs(gamma1 - 35.77) <= 0.05

    def test_y_thresholds_near_published(self):
        gamma0, gamma1 = threshold_angles_y()
        assert abs(gamma0 - 70.53) <= 0.05
        assert abs(gamma1 - 75.80) <= 0.05

    def test_y_first_threshold_closed_form(self):
        # the attainability root along the tripod family lands on arccos(1/3)
        gamma0, _ = threshold_angles_y()
        np.testing.assert_allclose(gamma0, np.degrees(np.arccos(1.0 / 3.0)), atol=1e-6)


class TestDeltaPerp:
    def test_central_value(self):
        np.testing.assert_allclose(delta_perp(45.0), 2.0 * SQ3 - 2.0)

    def test_continuity_at_piece_boundaries(self):
        gamma0, gamma1 = threshold_angles_perp()
        for offset in (gamma0, gamma1):
            for sign in (1.0, -1.0):
                boundary = 45.0 + sign * offset
                jump = abs(delta_perp(boundary - 1e-7) - delta_perp(boundary + 1e-7))
                assert jump <= 1e-6

    def test_matches_solver_away_from_boundaries(self):
        gamma0, gamma1 = threshold_angles_perp()
        for g in np.arange(1.0, 90.0, 2.0):
            offset = abs(g - 45.0)
            if min(abs(offset - gamma0), abs(offset - gamma1)) <= 0.5:
                continue
            value = solve_bloch_form(perp_triplet(g)).value
            np.testing.assert_allclose(delta_perp(g), value, atol=1e-4)

    def test_near_boundary_within_loose_tolerance(self):
        gamma0, gamma1 = threshold_angles_perp()
        for offset in (gamma0 - 0.25, gamma0 + 0.25, gamma1 - 0.25, gamma1 + 0.25):
            g = 45.0 + offset
            value = solve_bloch_form(perp_triplet(g)).value
            np.testing.assert_allclose(delta_perp(g), value, atol=5e-3)

    def test_outer_piece_root_function_monotone(self):
        # the bisection target (1/8) tan^2(t) (1 + 3 cos t)^2 increases on the
        # bracket, so the root is unique
        t = np.linspace(1e-6, np.pi / 2 - 1e-6, 2000)
        values = (np.tan(t) ** 2) * (1.0 + 3.0 * np.cos(t)) ** 2 / 8.0
        assert np.all(np.diff(values) > 0.0)

    def test_domain_checked(self):
        with pytest.raises(PreconditionError, match=r"\[0, 90\]"):
            delta_perp(-0.1)


class TestDeltaY:
    def test_degenerate_origin(self):
        np.testing.assert_allclose(delta_y(0.0), 0.0, atol=1e-12)

    def test_central_value(self):
        np.testing.assert_allclose(delta_y(45.0), SQ2)

    def test_continuity_at_piece_boundaries(self):
        gamma0, gamma1 = threshold_angles_y()
        for boundary in (gamma0, gamma1):
            jump = abs(delta_y(boundary - 1e-7) - delta_y(boundary + 1e-7))
            assert jump <= 1e-5

    def test_matches_solver_away_from_boundaries(self):
        gamma0, gamma1 = threshold_angles_y()
        for g in np.arange(1.0, 90.1, 2.0):
            if min(abs(g - gamma0), abs(g - gamma1)) <= 0.5:
                continue
            value = solve_bloch_form(y_triplet(g)).value
            np.testing.assert_allclose(delta_y(g), value, atol=1e-4)

    def test_coplanar_endpoint_matches_solver(self):
        value = solve_bloch_form(y_triplet(90.0)).value
        np.testing.assert_allclose(delta_y(90.0), value, atol=1e-4)


class TestGradedSymmetryType:
    def test_rejects_rotation(self):
        with pytest.raises(InvalidInputError, match="determinant"):
            GradedSymmetry(np.eye(3), (0, 1, 2), (1, 1, 1))

    def test_rejects_non_orthogonal(self):
        with pytest.raises(InvalidInputError, match="orthogonal"):
            GradedSymmetry(np.diag([2.0, 1.0, -0.5]), (0, 1, 2), (1, 1, 1))

    def test_rejects_bad_permutation_and_signs(self):
        reflection = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(InvalidInputError, match="permutation"):
            GradedSymmetry(reflection, (0, 0, 2), (1, 1, 1))
        with pytest.raises(InvalidInputError, match="signs"):
            GradedSymmetry(reflection, (0, 1, 2), (1, 2, 1))

    def test_reflection_read_only(self):
        sym = GradedSymmetry(np.diag([1.0, 1.0, -1.0]), (0, 1, 2), (1, 1, -1))
        with pytest.raises(ValueError):
            sym.reflection[0, 0] = 2.0


class TestDetectGradedSymmetries:
    def test_perp_family_symmetries(self):
        syms = detect_graded_symmetries(perp_triplet(30.0))
        patterns = {(s.permutation, s.signs) for s in syms}
        # mirror in the plane of the first two vectors, plus both bisector
        # reflections exchanging them
        assert ((0, 1, 2), (1, 1, -1)) in patterns
        assert ((1, 0, 2), (1, 1, 1)) in patterns
        assert ((1, 0, 2), (-1, -1, 1)) in patterns

    def test_orthogonal_triplet_coordinate_mirrors(self):
        syms = detect_graded_symmetries(orthogonal_triplet(0.0))
        reflections = [s.reflection for s in syms]
        for mirror in (
            np.diag([1.0, 1.0, -1.0]),
            np.diag([1.0, -1.0, 1.0]),
            np.diag([-1.0, 1.0, 1.0]),
        ):
            assert any(np.max(np.abs(r - mirror)) <= 1e-9 for r in reflections)

    def test_detected_action_holds(self):
        t = y_triplet(40.0)
        syms = detect_graded_symmetries(t)
        assert syms
        for sym in syms:
            assert action_residual(sym, t) <= 1e-8

    def test_generic_triplet_has_none(self):
        rng = np.random.default_rng(123)
        for _ in range(5):
            v = rng.normal(size=(3, 3))
            v /= np.linalg.norm(v, axis=1, keepdims=True)
            assert detect_graded_symmetries(Triplet.from_vectors(*v)) == []

    def test_requires_ideal_input(self):
        with pytest.raises(PreconditionError, match="ideal"):
            detect_graded_symmetries(orthogonal_triplet(20.0))


class TestSymmetrize:
    def test_symmetric_input_is_fixed_point(self):
        t = perp_triplet(30.0)
        syms = detect_graded_symmetries(t)
        out = symmetrize(t, syms)
        np.testing.assert_allclose(
            out.bloch_vectors(), t.bloch_vectors(), atol=1e-12
        )

    def test_solver_optimum_unchanged_in_substance(self):
        t = perp_triplet(30.0)
        syms = detect_graded_symmetries(t)
        optimum = solve_bloch_form(t).approximators
        symmetric = symmetrize(optimum, syms)
        before = worst_case_error(t, optimum).value
        after = worst_case_error(t, symmetric).value
        assert abs(after - before) <= 1e-6
        assert analyze(symmetric).lhs <= 4.0 + 1e-7
        for sym in syms:
            assert action_residual(sym, symmetric) <= 1e-9

    def test_averaging_never_increases_objective(self):
        t = y_triplet(40.0)
        syms = detect_graded_symmetries(t)
        rng = np.random.default_rng(9)
        base = solve_bloch_form(t).approximators.bloch_vectors()
        perturbed = Triplet.from_vectors(*(0.9 * base + 0.02 * rng.normal(size=(3, 3))))
        symmetric = symmetrize(perturbed, syms)
        assert (
            worst_case_error(t, symmetric).value
            <= worst_case_error(t, perturbed).value + 1e-12
        )

    def test_empty_symmetry_list_returns_input(self):
        t = perp_triplet(52.0)
        out = symmetrize(t, [])
        np.testing.assert_allclose(out.bloch_vectors(), t.bloch_vectors())

    def test_requires_unbiased_input(self):
        biased = Triplet(
            (
                BinaryMeasurement(0.2, (0, 0, 0.5)),
                BinaryMeasurement(0.0, (0, 1, 0)),
                BinaryMeasurement(0.0, (1, 0, 0)),
            )
        )
        with pytest.raises(PreconditionError, match="unbiased"):
            symmetrize(biased, [])

    def test_non_closing_generators_rejected(self):
        # two mirrors meeting at an angle incommensurate with pi generate an
        # infinite group; the cap must trip
        alpha = 1.0
        normal = np.array([np.cos(alpha), np.sin(alpha), 0.0])
        mirror_a = GradedSymmetry(np.diag([-1.0, 1.0, 1.0]), (0, 1, 2), (1, 1, 1))
        mirror_b = GradedSymmetry(
            np.eye(3) - 2.0 * np.outer(normal, normal), (0, 1, 2), (1, 1, 1)
        )
        with pytest.raises(InvalidSymmetryError, match="48"):
            symmetrize(orthogonal_triplet(0.0), [mirror_a, mirror_b])
