import math

import numpy as np
import pytest

from cogniq.dynamics import (
    ConvergenceError,
    MeanField,
    Region,
    classify_region,
    g,
    lyapunov,
    opponent_mix_matrix,
    rescale_rewards_below,
    solve_stationary,
)
from cogniq.game import RewardMatrix
from cogniq.learner import QState

UNIT = RewardMatrix(1.0, 1.0, 1.0, 1.0)
P_SATURATED = 0.9999546021312976       # 1 / (1 + e^{-10})
P_STARVED = 4.5397868702434395e-05     # 1 / (1 + e^{10})


def _random_state(rng, rewards):
    return QState.from_array(rng.random(4) * rewards.as_vector())


def test_mix_matrix_symmetric_state():
    mf = MeanField(UNIT, 0.1)
    for c in (0.0, 0.3, 1.0):
        a = opponent_mix_matrix(QState(c, c, c, c), mf)
        assert np.allclose(np.diag(a), 0.5)
        assert np.count_nonzero(a - np.diag(np.diag(a))) == 0


def test_mix_matrix_saturated_state():
    a = np.diag(opponent_mix_matrix(QState(1.0, 0.0, 0.0, 1.0), MeanField(UNIT, 0.1)))
    assert a == pytest.approx([P_SATURATED, P_STARVED, P_STARVED, P_SATURATED], abs=1e-12)


def test_mix_matrix_entries_depend_only_on_opponent():
    mf = MeanField(UNIT, 0.1)
    rng = np.random.default_rng(0)
    base = _random_state(rng, UNIT)
    a0 = np.diag(opponent_mix_matrix(base, mf))
    for _ in range(10):
        qa = rng.random(2)
        moved = QState(qa[0], qa[1], base.q_b1, base.q_b2)
        a1 = np.diag(opponent_mix_matrix(moved, mf))
        assert a1[0] == a0[0] and a1[1] == a0[1]  # A's rows fixed by B's Q only
        assert not (a1[2] == a0[2] and a1[3] == a0[3]) or (qa[0], qa[1]) == (base.q_a1, base.q_a2)


def test_mix_matrix_diagonal_in_open_unit_interval():
    rng = np.random.default_rng(1)
    mf = MeanField(UNIT, 0.1)
    for _ in range(100):
        d = np.diag(opponent_mix_matrix(_random_state(rng, UNIT), mf))
        assert np.all(d > 0.0) and np.all(d < 1.0)


def test_drift_vanishes_at_symmetric_half():
    assert np.allclose(g(QState(0.5, 0.5, 0.5, 0.5), MeanField(UNIT, 0.1)), 0.0)


def test_drift_near_saturated_corner():
    gv = g(QState(1.0, 0.0, 0.0, 1.0), MeanField(UNIT, 0.1))
    assert gv == pytest.approx([-P_STARVED, P_STARVED, P_STARVED, -P_STARVED], abs=1e-12)


def test_drift_scale_equivariance():
    rng = np.random.default_rng(2)
    c = 7.0
    for _ in range(50):
        r = RewardMatrix(*rng.uniform(0.5, 2.0, 4))
        gamma = rng.uniform(0.05, 0.5)
        q = _random_state(rng, r)
        g1 = g(q, MeanField(r, gamma))
        g2 = g(q.scaled(c), MeanField(r.scaled(c), c * gamma))
        assert np.max(np.abs(g2 - c * g1)) < 1e-12 * max(1.0, np.max(np.abs(c * g1)))


def test_solve_stationary_symmetric_fixed_point():
    res = solve_stationary(MeanField(UNIT, 0.1), QState(0.5, 0.5, 0.5, 0.5))
    assert res.q.as_array() == pytest.approx([0.5] * 4, abs=1e-9)
    assert res.residual <= 1e-10


def test_solve_stationary_near_equilibrium_verified_independently():
    mf = MeanField(UNIT, 0.1)
    res = solve_stationary(mf, QState(1.0, 0.0, 0.0, 1.0), tol=1e-12)
    q = res.q
    assert q.q_a1 > 0.99 and q.q_b2 > 0.99 and q.q_a2 < 0.01 and q.q_b1 < 0.01
    # independent check of the stationary equations, written from scratch
    vals = {"a1": q.q_a1, "a2": q.q_a2, "b1": q.q_b1, "b2": q.q_b2}
    opp_other = {
        "a1": ("b2", "b1"), "a2": ("b1", "b2"),
        "b1": ("a2", "a1"), "b2": ("a1", "a2"),
    }
    for key, (other, same) in opp_other.items():
        num = math.exp(vals[other] / 0.1)
        den = num + math.exp(vals[same] / 0.1)
        assert abs(vals[key] - 1.0 * num / den) <= 1e-10


def test_solve_stationary_random_rewards_inside_open_box():
    rng = np.random.default_rng(3)
    for _ in range(20):
        r = RewardMatrix(*rng.uniform(0.5, 2.0, 4))
        mf = MeanField(r, 0.1)
        res = solve_stationary(mf, _random_state(rng, r))
        arr = res.q.as_array()
        rvec = r.as_vector()
        assert np.all(arr > 0.0) and np.all(arr < rvec)
        assert np.abs(g(res.q, mf)).max() <= 1e-10


def test_solve_stationary_reports_nonconvergence():
    with pytest.raises(ConvergenceError) as exc_info:
        solve_stationary(MeanField(UNIT, 0.1), QState(1.0, 0.0, 0.0, 1.0),
                         tol=1e-14, max_iter=3)
    assert exc_info.value.iterations == 3


def test_region_classification():
    assert classify_region(QState(2.0, 1.0, 0.5, 1.0)) is Region.I
    assert classify_region(QState(2.0, 1.0, 2.0, 1.0)) is Region.II
    assert classify_region(QState(0.5, 1.0, 3.0, 1.0)) is Region.III
    assert classify_region(QState(0.5, 1.0, 0.5, 1.0)) is Region.IV
    assert classify_region(QState(1.0, 1.0, 3.0, 1.0)) is Region.BOUNDARY
    assert classify_region(QState(2.0, 1.0, 1.0, 1.0)) is Region.BOUNDARY
    # a zero denominator with positive numerator is a decisive preference
    assert classify_region(QState(1.0, 0.0, 3.0, 1.0)) is Region.II
    assert classify_region(QState(1.0, 0.0, 0.5, 1.0)) is Region.I
    # 0/0 carries no preference information at all
    assert classify_region(QState(0.0, 0.0, 3.0, 1.0)) is Region.BOUNDARY


def test_region_invariant_under_scaling():
    rng = np.random.default_rng(4)
    for _ in range(100):
        q = QState.from_array(rng.uniform(0.01, 1.0, 4))
        for c in (1e-3, 0.5, 42.0):
            assert classify_region(q.scaled(c)) is classify_region(q)


def test_lyapunov_zero_at_stationary_point():
    mf = MeanField(UNIT, 0.1)
    q_star = solve_stationary(mf, QState(1.0, 0.0, 0.0, 1.0), tol=1e-13).q
    report = lyapunov(q_star, mf)
    assert report.v < 1e-24
    assert abs(report.dv_dt_analytic) < 1e-24
    assert np.all(np.abs(report.epsilons) < 1e-12)


def test_coefficient_bounds():
    rng = np.random.default_rng(5)
    for _ in range(200):
        gamma = rng.uniform(0.02, 1.0)
        r = RewardMatrix(*rng.uniform(0.1, 2.0, 4))
        report = lyapunov(_random_state(rng, r), MeanField(r, gamma))
        assert np.all(report.c_coeffs > 0.0)
        assert np.all(report.c_coeffs < r.r_max / gamma)
    # sharper bound in the contraction regime
    for _ in range(200):
        gamma = rng.uniform(0.02, 1.0)
        r = RewardMatrix(*(rng.uniform(0.1, 0.999, 4) * 2.0 * gamma))
        report = lyapunov(_random_state(rng, r), MeanField(r, gamma))
        assert np.all(report.c_coeffs < 2.0)


def test_softmax_product_kernel_bounded():
    rng = np.random.default_rng(6)
    for _ in range(500):
        x, y = rng.uniform(-50, 50, 2)
        m = max(x, y)
        ex, ey = math.exp(x - m), math.exp(y - m)
        assert ex * ey / (ex + ey) ** 2 <= 0.25 < 1.0


def test_derivative_matches_finite_difference():
    rng = np.random.default_rng(7)
    h = 1e-6
    for _ in range(50):
        r = RewardMatrix(*rng.uniform(0.5, 2.0, 4))
        mf = MeanField(r, 0.1)
        q = _random_state(rng, r)
        report = lyapunov(q, mf)
        gv = g(q, mf)
        v_plus = lyapunov(QState.from_array(q.as_array() + h * gv), mf).v
        v_minus = lyapunov(QState.from_array(q.as_array() - h * gv), mf).v
        fd = (v_plus - v_minus) / (2.0 * h)
        assert abs(fd - report.dv_dt_analytic) <= 1e-5 * max(abs(report.dv_dt_analytic), 1e-12)


def test_derivative_negative_in_contraction_regime():
    rng = np.random.default_rng(8)
    for _ in range(500):
        gamma = rng.uniform(0.05, 1.0)
        r = RewardMatrix(*(rng.uniform(0.1, 0.999, 4) * 2.0 * gamma))
        q = _random_state(rng, r)
        report = lyapunov(q, MeanField(r, gamma))
        if report.v > 1e-14:
            assert report.dv_dt_analytic < 0.0


def test_derivative_bound_under_favorable_sign_pattern():
    # the cross-term bound only holds when every epsilon product it touches is
    # nonnegative; under that pattern it follows from C < 2
    rng = np.random.default_rng(9)
    checked = 0
    while checked < 100:
        gamma = rng.uniform(0.05, 1.0)
        r = RewardMatrix(*(rng.uniform(0.1, 0.999, 4) * 2.0 * gamma))
        q = _random_state(rng, r)
        report = lyapunov(q, MeanField(r, gamma))
        e_a1, e_a2, e_b1, e_b2 = report.epsilons
        if min(e_a1 * e_b2, e_a2 * e_b1, e_a1 * e_b1, e_a2 * e_b2) < 0.0:
            continue
        bound = -(e_a1 - e_b2) ** 2 - (e_a2 - e_b1) ** 2
        assert report.dv_dt_analytic / 2.0 <= bound + 1e-12
        checked += 1


def test_box_boundary_points_flow_inward():
    rng = np.random.default_rng(10)
    for _ in range(100):
        r = RewardMatrix(*rng.uniform(0.5, 2.0, 4))
        mf = MeanField(r, 0.1)
        rvec = r.as_vector()
        arr = rng.random(4) * rvec
        idx = rng.integers(0, 4)
        low = rng.random() < 0.5
        arr[idx] = 0.0 if low else rvec[idx]
        gv = g(QState.from_array(arr), mf)
        assert gv[idx] > 0.0 if low else gv[idx] < 0.0


def test_report_scale_equivariance():
    rng = np.random.default_rng(11)
    for c in (1e-3, 3.0, 1e3):
        for _ in range(20):
            r = RewardMatrix(*rng.uniform(0.5, 2.0, 4))
            gamma = rng.uniform(0.05, 0.5)
            q = _random_state(rng, r)
            rep1 = lyapunov(q, MeanField(r, gamma))
            rep2 = lyapunov(q.scaled(c), MeanField(r.scaled(c), c * gamma))
            assert np.max(np.abs(rep2.epsilons - c * rep1.epsilons)) <= 1e-10 * c
            assert rep2.v == pytest.approx(c * c * rep1.v, rel=1e-10)
            assert np.max(np.abs(rep2.c_coeffs - rep1.c_coeffs)) <= 1e-10
            assert rep2.dv_dt_analytic == pytest.approx(c * c * rep1.dv_dt_analytic, rel=1e-9)


def test_rescale_rewards_below_contraction_threshold():
    mf = MeanField(RewardMatrix(1.0, 2.0, 0.7, 1.4), 0.1)
    scaled_mf, scaled_q, c = rescale_rewards_below(mf, QState(1.0, 1.0, 1.0, 1.0))
    assert scaled_mf.rewards.r_max < 2.0 * mf.gamma
    assert scaled_mf.gamma == mf.gamma
    assert scaled_q.q_a1 == c


def test_mean_field_validation():
    with pytest.raises(ValueError):
        MeanField(UNIT, 0.0)
    with pytest.raises(ValueError):
        MeanField(UNIT, -1.0)
