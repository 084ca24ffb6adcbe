"""Tests for the similarity score and the trajectory comparison metrics.

The dynamic programs are checked against memo-free recursive definitions
on short random sequences.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

import tripmatch.metrics as metrics
from tripmatch.metrics import (
    MetricParams,
    PointRole,
    TimeMode,
    WgmWeights,
    car_feasible,
    car_score,
    cp_feasible,
    cp_score,
    dtw,
    frechet_discrete,
    laplacian_kernel,
    lcss,
    psim,
    wgm_sim,
)

W = WgmWeights(0.6, 0.4)


def random_seq(rng, n):
    pts = rng.random((n, 3))
    pts[:, 2] = np.sort(pts[:, 2])
    return pts


# --- recursive-definition oracles -----------------------------------------

def lcss_rec(t1, t2, params, i=None, j=None):
    if i is None:
        i, j = len(t1) - 1, len(t2) - 1
    if i < 0 or j < 0:
        return 0
    d = math.hypot(t1[i][0] - t2[j][0], t1[i][1] - t2[j][1])
    if d <= params.eps_space and abs(t1[i][2] - t2[j][2]) <= params.eps_time:
        return 1 + lcss_rec(t1, t2, params, i - 1, j - 1)
    return max(lcss_rec(t1, t2, params, i - 1, j), lcss_rec(t1, t2, params, i, j - 1))


def dtw_rec(t1, t2, with_time, i=None, j=None):
    if i is None:
        i, j = len(t1) - 1, len(t2) - 1
    cost = math.hypot(t1[i][0] - t2[j][0], t1[i][1] - t2[j][1])
    if with_time:
        cost *= abs(t1[i][2] - t2[j][2])
    if i == 0 and j == 0:
        return cost
    best = math.inf
    if i > 0:
        best = min(best, dtw_rec(t1, t2, with_time, i - 1, j))
    if j > 0:
        best = min(best, dtw_rec(t1, t2, with_time, i, j - 1))
    if i > 0 and j > 0:
        best = min(best, dtw_rec(t1, t2, with_time, i - 1, j - 1))
    return cost + best


def frechet_rec(t1, t2, i=None, j=None):
    if i is None:
        i, j = len(t1) - 1, len(t2) - 1
    d = math.hypot(t1[i][0] - t2[j][0], t1[i][1] - t2[j][1])
    if i == 0 and j == 0:
        return d
    best = math.inf
    if i > 0:
        best = min(best, frechet_rec(t1, t2, i - 1, j))
    if j > 0:
        best = min(best, frechet_rec(t1, t2, i, j - 1))
    if i > 0 and j > 0:
        best = min(best, frechet_rec(t1, t2, i - 1, j - 1))
    return max(d, best)


# ---------------------------------------------------------------------------

class TestPsim:
    def test_identical_points_are_one(self):
        for w in (W, WgmWeights(1, 1), WgmWeights(0.2, 5.0)):
            assert psim((0.3, 0.4, 0.5), (0.3, 0.4, 0.5), w) == 1.0

    def test_half_at_unit_distance_and_time(self):
        for w in (W, WgmWeights(2, 3), WgmWeights(1, 0.01)):
            assert math.isclose(psim((0, 0, 0), (1, 0, 1), w), 0.5, rel_tol=1e-12)

    def test_space_only_weights(self):
        assert math.isclose(
            psim((0, 0, 0), (3, 0, 0.9), WgmWeights(1, 0)), 0.25, rel_tol=1e-12)

    def test_weighted_closed_form(self):
        # d = 1, tau = 0 with weights (0.6, 0.4) reduces to 0.5 ** 0.6
        got = psim((0, 0, 0.2), (1, 0, 0.2), W)
        assert math.isclose(got, 0.5 ** 0.6, rel_tol=1e-12)
        assert math.isclose(got, 0.6597539553864471, rel_tol=1e-12)

    def test_weight_scaling_invariance(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p, q = rng.random(3), rng.random(3)
            w1, w2, c = rng.uniform(0.01, 5, 3)
            a = psim(p, q, WgmWeights(w1, w2))
            b = psim(p, q, WgmWeights(c * w1, c * w2))
            assert math.isclose(a, b, rel_tol=1e-12)

    def test_symmetric_in_absolute_mode(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            p, q = rng.random(3), rng.random(3)
            assert psim(p, q, W) == psim(q, p, W)

    def test_monotone_in_distance_and_time(self):
        scores_d = [psim((0, 0, 0), (d, 0, 0.1), W) for d in np.linspace(0, 2, 20)]
        assert scores_d == sorted(scores_d, reverse=True)
        scores_t = [psim((0, 0, 0), (0.1, 0, t), W) for t in np.linspace(0, 2, 20)]
        assert scores_t == sorted(scores_t, reverse=True)

    def test_in_unit_interval(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            p, q = rng.random(3) * 3, rng.random(3) * 3
            s = psim(p, q, W)
            assert 0.0 < s <= 1.0

    def test_signed_car_roles(self):
        early, late = (0, 0, 0.2), (0, 0, 0.5)
        # origin: positive when the second point is later
        assert psim(early, late, W, TimeMode.SIGNED_CAR, PointRole.ORIGIN) < 1.0
        assert psim(late, early, W, TimeMode.SIGNED_CAR, PointRole.ORIGIN) == 1.0
        # destination: positive when the second point is earlier
        assert psim(late, early, W, TimeMode.SIGNED_CAR, PointRole.DESTINATION) < 1.0
        assert psim(early, late, W, TimeMode.SIGNED_CAR, PointRole.DESTINATION) == 1.0
        # interior always absolute
        assert psim(early, late, W, TimeMode.SIGNED_CAR, PointRole.INTERIOR) == \
            psim(late, early, W, TimeMode.SIGNED_CAR, PointRole.INTERIOR)

    def test_signed_cp_swaps_roles(self):
        p, q = (0.1, 0.2, 0.3), (0.4, 0.5, 0.6)
        for role, mirrored in ((PointRole.ORIGIN, PointRole.DESTINATION),
                               (PointRole.DESTINATION, PointRole.ORIGIN)):
            assert psim(p, q, W, TimeMode.SIGNED_CP, role) == \
                psim(p, q, W, TimeMode.SIGNED_CAR, mirrored)

    def test_negative_signed_time_clamps(self):
        # wrong-order pair scores as if the time term were zero
        late, early = (0, 0, 0.5), (0, 0, 0.2)
        assert psim(late, early, W, TimeMode.SIGNED_CAR, PointRole.ORIGIN) == 1.0


class TestWgmSim:
    def test_identical_trips(self):
        t = np.array([[0.1, 0.2, 0.0], [0.3, 0.4, 0.5], [0.5, 0.6, 1.0]])
        assert wgm_sim(t, t, W) == 1.0

    def test_mean_of_od_psims(self):
        # origin pair identical (psim 1.0), destination at d = 1, dt = 1 (psim 0.5)
        t1 = np.array([[0, 0, 0], [0, 0, 0]], dtype=float)
        t2 = np.array([[0, 0, 0], [1, 0, 1]], dtype=float)
        assert math.isclose(wgm_sim(t1, t2, W), 0.75, rel_tol=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="equal length"):
            wgm_sim(np.zeros((2, 3)), np.zeros((3, 3)), W)

    def test_single_point_pair_scored_as_origins(self):
        # signed origin rule applies to a length-1 sequence
        t1 = np.array([[0.0, 0.0, 0.5]])
        t2 = np.array([[0.0, 0.0, 0.2]])
        assert wgm_sim(t1, t2, W, TimeMode.SIGNED_CAR) == \
            psim(t1[0], t2[0], W, TimeMode.SIGNED_CAR, PointRole.ORIGIN)

    def test_exactly_n_psim_calls(self, monkeypatch):
        calls = []
        original = metrics.psim

        def counting(*args, **kwargs):
            calls.append(1)
            return original(*args, **kwargs)

        monkeypatch.setattr(metrics, "psim", counting)
        rng = np.random.default_rng(3)
        for n in (1, 2, 50):
            calls.clear()
            wgm_sim(random_seq(rng, n), random_seq(rng, n), W)
            assert len(calls) == n


class TestCarCpScores:
    def test_identical_is_one_and_feasible(self):
        t = np.array([[0.1, 0.1, 0.2], [0.6, 0.6, 0.7]])
        assert car_score(t, t, W) == 1.0
        assert car_feasible(t, t)

    def test_ride_starting_early_is_infeasible(self):
        rider = np.array([[0, 0, 0.2], [1, 1, 0.8]])
        ride = np.array([[0, 0, 0.1], [1, 1, 0.7]])
        assert not car_feasible(rider, ride)
        nested = np.array([[0, 0, 0.3], [1, 1, 0.7]])
        assert car_feasible(rider, nested)
        # carpool flips the nesting: the ride's window must contain the rider's
        assert cp_feasible(nested, rider)
        assert not cp_feasible(rider, nested)

    def test_nested_window_derived_value(self):
        rider = np.array([[0, 0, 0.0], [1, 0, 0.5]])
        ride = np.array([[0, 0, 0.1], [1, 0, 0.4]])
        expected = math.exp(0.4 * math.log(1 / 1.1))  # both endpoint psims equal
        assert math.isclose(car_score(rider, ride, W), expected, rel_tol=1e-12)
        assert car_feasible(rider, ride)

    def test_cp_is_transpose(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            a, b = random_seq(rng, 2), random_seq(rng, 2)
            assert cp_score(a, b, W) == car_score(b, a, W)
            assert cp_feasible(a, b) == car_feasible(b, a)

    def test_cp_matrix_is_transpose_of_car_matrix(self):
        rng = np.random.default_rng(5)
        seqs = [random_seq(rng, 2) for _ in range(6)]
        car = np.array([[car_score(a, b, W) for b in seqs] for a in seqs])
        cp = np.array([[cp_score(a, b, W) for b in seqs] for a in seqs])
        assert np.array_equal(cp, car.T)


class TestLcss:
    PARAMS = MetricParams(eps_space=0.1, eps_time=0.1)

    def test_identical(self):
        rng = np.random.default_rng(6)
        t = random_seq(rng, 5)
        assert lcss(t, t, self.PARAMS) == 5

    def test_everything_far_apart(self):
        t1 = np.array([[0, 0, 0], [0, 0, 1]], dtype=float)
        t2 = np.array([[5, 5, 0], [5, 5, 1]], dtype=float)
        assert lcss(t1, t2, self.PARAMS) == 0

    def test_matches_recursive_oracle(self):
        rng = np.random.default_rng(7)
        params = MetricParams(eps_space=0.4, eps_time=0.5)
        for _ in range(100):
            t1 = random_seq(rng, int(rng.integers(1, 7)))
            t2 = random_seq(rng, int(rng.integers(1, 7)))
            assert lcss(t1, t2, params) == lcss_rec(t1, t2, params)

    def test_bounded_by_shorter_length(self):
        rng = np.random.default_rng(8)
        t1, t2 = random_seq(rng, 4), random_seq(rng, 9)
        assert 0 <= lcss(t1, t2, MetricParams(5.0, 5.0)) <= 4


class TestDtw:
    def test_identical_is_zero(self):
        rng = np.random.default_rng(9)
        t = random_seq(rng, 6)
        assert dtw(t, t) == 0.0

    def test_single_points(self):
        p = np.array([[0, 0, 0]], dtype=float)
        q = np.array([[3, 4, 2]], dtype=float)
        assert dtw(p, q) == 5.0
        assert dtw(p, q, "distance_times_time") == 10.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dtw(np.zeros((0, 3)), np.zeros((1, 3)))

    def test_matches_recursive_oracle(self):
        rng = np.random.default_rng(10)
        for mode in ("distance", "distance_times_time"):
            for _ in range(60):
                t1 = random_seq(rng, int(rng.integers(1, 8)))
                t2 = random_seq(rng, int(rng.integers(1, 8)))
                got = dtw(t1, t2, mode)
                want = dtw_rec(t1, t2, mode == "distance_times_time")
                assert math.isclose(got, want, rel_tol=0, abs_tol=1e-12)


class TestFrechet:
    def test_identical_is_zero(self):
        rng = np.random.default_rng(11)
        t = random_seq(rng, 6)
        assert frechet_discrete(t, t) == 0.0

    def test_parallel_offset(self):
        t1 = np.array([[0, 0, 0], [0.5, 0, 0.5], [1, 0, 1]])
        t2 = np.array([[0, 0.2, 0], [0.5, 0.2, 0.5], [1, 0.2, 1]])
        assert math.isclose(frechet_discrete(t1, t2), 0.2, rel_tol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            frechet_discrete(np.zeros((1, 3)), np.zeros((0, 3)))

    def test_matches_recursive_oracle(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            t1 = random_seq(rng, int(rng.integers(1, 8)))
            t2 = random_seq(rng, int(rng.integers(1, 8)))
            got = frechet_discrete(t1, t2)
            assert math.isclose(got, frechet_rec(t1, t2), rel_tol=0, abs_tol=1e-12)


class TestCellCounts:
    def test_dp_metrics_fill_m_by_n_cells(self, monkeypatch):
        calls = []
        original = metrics._xy_dist

        def counting(p, q):
            calls.append(1)
            return original(p, q)

        monkeypatch.setattr(metrics, "_xy_dist", counting)
        rng = np.random.default_rng(13)
        params = MetricParams(0.3, 0.3)
        for m, n in ((2, 5), (7, 3), (8, 8)):
            t1, t2 = random_seq(rng, m), random_seq(rng, n)
            for run in (lambda: lcss(t1, t2, params),
                        lambda: dtw(t1, t2),
                        lambda: dtw(t1, t2, "distance_times_time"),
                        lambda: frechet_discrete(t1, t2)):
                calls.clear()
                run()
                assert len(calls) == m * n


class TestLaplacianKernel:
    def test_fixed_points(self):
        assert laplacian_kernel(1.0) == 1.0
        assert math.isclose(laplacian_kernel(0.0, 1.0), math.exp(-1.0), rel_tol=1e-15)

    def test_preserves_order(self):
        rng = np.random.default_rng(14)
        scores = rng.random(50)
        mapped = [laplacian_kernel(s, 3.0) for s in scores]
        assert np.array_equal(np.argsort(scores), np.argsort(mapped))

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            laplacian_kernel(0.5, 0.0)


class TestWeights:
    def test_validation(self):
        with pytest.raises(ValueError):
            WgmWeights(-0.1, 0.5)
        with pytest.raises(ValueError):
            WgmWeights(0.0, 0.0)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            MetricParams(0.0, 1.0)
        with pytest.raises(ValueError):
            MetricParams(1.0, 1.0, "nope")
