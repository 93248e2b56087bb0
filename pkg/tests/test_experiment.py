"""Tests for the measurement families and the shot-level simulation."""

import numpy as np
import pytest

from tripletmur.errors import InvalidInputError, PreconditionError
from tripletmur.experiment import (
    FAMILIES,
    McEstimate,
    ShotRecord,
    family_triplet,
    run_experiment,
    sweep,
)
from tripletmur.qubit import BinaryMeasurement, Triplet

SQ3 = np.sqrt(3.0)


class TestFamilyTriplet:
    def test_orthogonal_family_scaling(self):
        t = family_triplet("m_o", 40.0)
        np.testing.assert_allclose(
            np.linalg.norm(t.bloch_vectors(), axis=1), np.cos(np.radians(40.0))
        )
        m = t.bloch_vectors()
        np.testing.assert_allclose(m @ m.T, np.diag(np.diag(m @ m.T)), atol=1e-15)

    def test_orthogonal_family_degenerate_endpoint(self):
        t = family_triplet("m_o", 90.0)
        np.testing.assert_allclose(t.bloch_vectors(), 0.0, atol=1e-15)

    def test_perp_family_pair_angle(self):
        for g in (10.0, 30.0, 62.5):
            m = family_triplet("m_perp", g).bloch_vectors()
            np.testing.assert_allclose(
                float(m[0] @ m[1]), np.cos(np.radians(2 * g)), atol=1e-14
            )
            np.testing.assert_allclose(m[2], [0, 0, 1])

    def test_planar_family_is_coplanar(self):
        m = family_triplet("m_p", 35.0).bloch_vectors()
        assert np.linalg.matrix_rank(m, tol=1e-12) == 2

    def test_y_family_arm_relations(self):
        g = 33.0
        m = family_triplet("m_y", g).bloch_vectors()
        np.testing.assert_allclose(np.linalg.norm(m, axis=1), 1.0)
        c, s = np.cos(np.radians(g)), np.sin(np.radians(g))
        arms = (m - np.array([0.0, 0.0, c])) / s
        for j in range(3):
            np.testing.assert_allclose(arms[j] @ np.array([0.0, 0.0, 1.0]), 0.0, atol=1e-12)
            for k in range(j + 1, 3):
                np.testing.assert_allclose(arms[j] @ arms[k], -0.5, atol=1e-12)

    def test_all_families_unbiased_unit_or_smaller(self):
        for name in FAMILIES:
            t = family_triplet(name, 25.0)
            assert t.is_unbiased()
            assert np.all(np.linalg.norm(t.bloch_vectors(), axis=1) <= 1.0 + 1e-12)

    def test_unknown_family_rejected(self):
        with pytest.raises(InvalidInputError, match="unknown family"):
            family_triplet("m_x", 10.0)

    def test_angle_range_checked(self):
        with pytest.raises(InvalidInputError, match=r"\[0, 90\]"):
            family_triplet("m_o", -5.0)
        with pytest.raises(InvalidInputError, match=r"\[0, 90\]"):
            family_triplet("m_y", 90.1)


class TestShotRecord:
    def test_counts_must_sum_to_shots(self):
        with pytest.raises(InvalidInputError, match="sum"):
            ShotRecord(counts={"a": 3, "b": 4}, shots=10, seed=0)


class TestRunExperiment:
    def test_orthogonal_estimate_matches_exact(self):
        est = run_experiment(family_triplet("m_o", 0.0), shots=10**6, seed=7)
        exact = 2.0 * (SQ3 - 1.0)
        assert abs(est.delta_hat - exact) <= 4.0 * est.stderr
        assert est.stderr > 0.0
        assert est.rng == "philox"

    def test_compatible_estimate_near_zero(self):
        est = run_experiment(family_triplet("m_o", 70.0), shots=10**6, seed=7)
        assert abs(est.delta_hat) <= 4.0 * est.stderr
        assert est.stderr > 0.0

    def test_degenerate_compatible_row_keeps_noise(self):
        # all three directions coincide; the probe state must keep the
        # outcome frequencies away from 0 and 1
        est = run_experiment(family_triplet("m_y", 0.0), shots=10**4, seed=7)
        assert est.stderr > 0.0
        assert abs(est.delta_hat) <= 4.0 * est.stderr

    def test_per_observable_components(self):
        est = run_experiment(family_triplet("m_o", 0.0), shots=10**6, seed=11)
        np.testing.assert_allclose(est.delta_hat, est.distances.sum())
        assert est.distances.shape == (3,)
        assert np.all(est.distance_errors > 0.0)
        # the family is symmetric, so the three components are equal shares
        exact_share = 2.0 * (SQ3 - 1.0) / 3.0
        assert np.all(np.abs(est.distances - exact_share) <= 4.0 * est.distance_errors)

    def test_record_counts_sum_to_shots(self):
        est = run_experiment(family_triplet("m_perp", 40.0), shots=12345, seed=1)
        assert sum(est.record.counts.values()) == 12345
        assert est.record.shots == 12345

    def test_deterministic_given_seed(self):
        t = family_triplet("m_y", 30.0)
        a = run_experiment(t, shots=10**4, seed=3)
        b = run_experiment(t, shots=10**4, seed=3)
        assert a.delta_hat == b.delta_hat
        assert a.stderr == b.stderr
        assert a.record.counts == b.record.counts

    def test_stderr_scales_with_shots(self):
        t = family_triplet("m_o", 0.0)
        coarse = run_experiment(t, shots=40000, seed=5).stderr
        fine = run_experiment(t, shots=160000, seed=5).stderr
        assert 1.6 <= coarse / fine <= 2.4

    def test_small_shot_budget_rejected(self):
        with pytest.raises(InvalidInputError, match="at least 100"):
            run_experiment(family_triplet("m_o", 0.0), shots=99, seed=0)

    def test_biased_input_rejected(self):
        biased = Triplet(
            (
                BinaryMeasurement(0.2, (0, 0, 0.5)),
                BinaryMeasurement(0.0, (0, 1, 0)),
                BinaryMeasurement(0.0, (1, 0, 0)),
            )
        )
        with pytest.raises(PreconditionError, match="unbiased"):
            run_experiment(biased, shots=1000, seed=0)


class TestSweep:
    def test_rows_follow_grid_order(self):
        grid = [20.0, 5.0, 40.0]
        rows = sweep("m_o", grid, shots=0, seed=0)
        assert [r.gamma_deg for r in rows] == grid

    def test_zero_shots_skips_monte_carlo(self):
        rows = sweep("m_p", [30.0, 45.0], shots=0, seed=0)
        for row in rows:
            assert row.mc_estimate is None
            assert row.mc_stderr is None
            assert row.analytic is None  # no closed form for this family

    def test_orthogonal_bound_tight_across_range(self):
        for row in sweep("m_o", np.arange(0.0, 54.1, 6.0), shots=0, seed=0):
            assert row.attainable
            assert abs(row.exact - row.lower_bound) <= 1e-5

    def test_planar_bound_loose(self):
        row = sweep("m_p", [45.0], shots=0, seed=0)[0]
        assert not row.attainable
        assert row.exact - row.lower_bound >= 1e-3

    def test_y_attainability_flips_at_threshold(self):
        from tripletmur.analytic import threshold_angles_y

        gamma0, _ = threshold_angles_y()
        grid = np.arange(70.0, 71.05, 0.1)
        rows = sweep("m_y", grid, shots=0, seed=0)
        flags = [r.attainable for r in rows]
        flips = [
            (grid[i], grid[i + 1])
            for i in range(len(flags) - 1)
            if flags[i] != flags[i + 1]
        ]
        assert len(flips) == 1
        lo, hi = flips[0]
        assert lo <= gamma0 <= hi
        assert abs(gamma0 - 70.53) <= 0.05

    def test_deterministic_given_seed(self):
        grid = [10.0, 50.0]
        first = sweep("m_perp", grid, shots=5000, seed=21)
        second = sweep("m_perp", grid, shots=5000, seed=21)
        assert first == second

    def test_monte_carlo_tracks_exact(self):
        rows = sweep("m_y", np.arange(0.0, 90.1, 15.0), shots=10**5, seed=7)
        for row in rows:
            assert abs(row.mc_estimate - row.exact) <= 4.0 * row.mc_stderr
            np.testing.assert_allclose(row.analytic, row.exact, atol=1e-4)
