"""Deterministic mean-field machinery for the channel-selection game.

The joint Q-state q = (Q_A1, Q_A2, Q_B1, Q_B2) evolves, in the mean field, by
qdot = g(q) = A(q) r - q, where A(q) is the diagonal matrix of each user's
probability that its opponent takes the *other* channel. Stationary points of
the learning process solve g(q) = 0. The Lyapunov function V = ||g(q)||^2 has
an analytic derivative along the flow, assembled from four positive
coefficients (C11, C12, C21, C22); when every reward is below twice the
temperature those coefficients are below 2 and dV/dt is strictly negative away
from stationary points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .game import RewardMatrix
from .learner import QState
from .policy import boltzmann_channel1


class ConvergenceError(RuntimeError):
    """Raised when the stationary-point iteration does not reach tolerance."""

    def __init__(self, message, iterations, residual):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


@dataclass(frozen=True)
class MeanField:
    """Game parameters of the deterministic flow: rewards and temperature."""

    rewards: RewardMatrix
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gamma must be finite and > 0, got {self.gamma!r}")


class Region(Enum):
    """Quadrants of the (mu_A, mu_B) = (Q_A1/Q_A2, Q_B1/Q_B2) preference plane.

    I and III are the stable orthogonal-preference quadrants; II and IV are
    the colliding (unstable) ones; BOUNDARY covers exact ties and zero
    denominators.
    """

    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class StationaryResult:
    q: QState
    iterations: int
    residual: float


@dataclass(frozen=True)
class LyapunovReport:
    """V, its analytic time derivative along the flow, the componentwise
    residuals eps_ij = (A(q) r - q)_ij in (A1, A2, B1, B2) order, and the four
    coefficients in (C11, C12, C21, C22) order."""

    v: float
    dv_dt_analytic: float
    epsilons: np.ndarray
    c_coeffs: np.ndarray


def _p_channel1(qarr: np.ndarray, gamma: float) -> tuple[float, float]:
    """(P(A chooses 1), P(B chooses 1)) for a raw state vector."""
    p_a1 = boltzmann_channel1(qarr[0], qarr[1], gamma)
    p_b1 = boltzmann_channel1(qarr[2], qarr[3], gamma)
    return p_a1, p_b1


def _mix_diagonal(qarr: np.ndarray, gamma: float) -> np.ndarray:
    # Entry (i, j) is the opponent's probability of the other channel:
    # (A,1)->P(B=2), (A,2)->P(B=1), (B,1)->P(A=2), (B,2)->P(A=1).
    p_a1, p_b1 = _p_channel1(qarr, gamma)
    return np.array([1.0 - p_b1, p_b1, 1.0 - p_a1, p_a1])


def _g_array(qarr: np.ndarray, rvec: np.ndarray, gamma: float) -> np.ndarray:
    # scalar arithmetic: the integrator calls this four times per step and
    # numpy dispatch overhead dominates on length-4 arrays
    qa1, qa2, qb1, qb2 = qarr
    p_a1 = boltzmann_channel1(qa1, qa2, gamma)
    p_b1 = boltzmann_channel1(qb1, qb2, gamma)
    return np.array([
        (1.0 - p_b1) * rvec[0] - qa1,
        p_b1 * rvec[1] - qa2,
        (1.0 - p_a1) * rvec[2] - qb1,
        p_a1 * rvec[3] - qb2,
    ])


def _g_states(states: np.ndarray, rvec: np.ndarray, gamma: float) -> np.ndarray:
    """g evaluated at every row of an (N, 4) state array; the stable softmax
    here reproduces boltzmann_channel1 bit for bit."""

    def p1(z):
        e = np.exp(-np.abs(z))
        return np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))

    p_a1 = p1((states[:, 0] - states[:, 1]) / gamma)
    p_b1 = p1((states[:, 2] - states[:, 3]) / gamma)
    out = np.empty_like(states)
    out[:, 0] = (1.0 - p_b1) * rvec[0] - states[:, 0]
    out[:, 1] = p_b1 * rvec[1] - states[:, 1]
    out[:, 2] = (1.0 - p_a1) * rvec[2] - states[:, 2]
    out[:, 3] = p_a1 * rvec[3] - states[:, 3]
    return out


def opponent_mix_matrix(q: QState, mf: MeanField) -> np.ndarray:
    """4x4 diagonal matrix A(q); every diagonal entry lies in (0, 1)."""
    return np.diag(_mix_diagonal(q.as_array(), mf.gamma))


def g(q: QState, mf: MeanField) -> np.ndarray:
    """The mean-field drift A(q) r - q as a length-4 vector."""
    return _g_array(q.as_array(), mf.rewards.as_vector(), mf.gamma)


def solve_stationary(
    mf: MeanField,
    q0: QState,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    damping: float = 0.5,
) -> StationaryResult:
    """Solve g(q) = 0 by damped fixed-point iteration q <- q + damping * g(q).

    The map A(q) r is a bounded self-map of the box prod [0, R_ij], but its
    Jacobian scales like R/gamma, so a fixed damping can settle into an exact
    period-2 cycle. The damping is therefore halved whenever the residual
    fails to improve for 20 consecutive iterations.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol!r}")
    rvec = mf.rewards.as_vector()
    qarr = q0.as_array()
    lam = damping
    best = math.inf
    stall = 0
    residual = math.inf
    for it in range(1, max_iter + 1):
        gv = _g_array(qarr, rvec, mf.gamma)
        residual = float(np.abs(gv).max())
        if residual <= tol:
            return StationaryResult(QState.from_array(qarr), it, residual)
        if residual < 0.9 * best:
            best = residual
            stall = 0
        else:
            stall += 1
            if stall >= 20:
                lam *= 0.5
                best = residual
                stall = 0
        qarr = qarr + lam * gv
    raise ConvergenceError(
        f"no stationary point within {max_iter} iterations (residual {residual:.3e})",
        max_iter,
        residual,
    )


def classify_region(q: QState) -> Region:
    """Quadrant of the preference plane. Exact ties map to BOUNDARY, as does
    the indeterminate ratio 0/0; a zero denominator with a positive numerator
    is a decisive preference (mu = +inf) and classifies like any mu > 1."""
    if (q.q_a1 == 0.0 and q.q_a2 == 0.0) or (q.q_b1 == 0.0 and q.q_b2 == 0.0):
        return Region.BOUNDARY
    mu_a = q.q_a1 / q.q_a2 if q.q_a2 != 0.0 else math.inf
    mu_b = q.q_b1 / q.q_b2 if q.q_b2 != 0.0 else math.inf
    if mu_a == 1.0 or mu_b == 1.0:
        return Region.BOUNDARY
    if mu_a > 1.0:
        return Region.II if mu_b > 1.0 else Region.I
    return Region.III if mu_b > 1.0 else Region.IV


def lyapunov(q: QState, mf: MeanField) -> LyapunovReport:
    """Evaluate V = ||g(q)||^2 and its analytic derivative along qdot = g(q).

    With p_i the probability that user i picks channel 1, the shared kernel
    k_i = p_i (1 - p_i) / gamma gives

        C11 = R_A1 k_B + R_B1 k_A      C12 = R_A1 k_B + R_B2 k_A
        C21 = R_A2 k_B + R_B1 k_A      C22 = R_A2 k_B + R_B2 k_A

    and

        (1/2) dV/dt = -sum eps^2 + C12 e_A1 e_B2 - C11 e_A1 e_B1
                                 + C21 e_A2 e_B1 - C22 e_A2 e_B2.

    p (1 - p) <= 1/4, so every C is below R_max / gamma in general and below 2
    whenever all rewards are below 2 gamma.
    """
    qarr = q.as_array()
    rvec = mf.rewards.as_vector()
    gamma = mf.gamma
    p_a1, p_b1 = _p_channel1(qarr, gamma)
    eps = _mix_diagonal(qarr, gamma) * rvec - qarr
    v = float(np.dot(eps, eps))

    k_a = p_a1 * (1.0 - p_a1) / gamma
    k_b = p_b1 * (1.0 - p_b1) / gamma
    c11 = rvec[0] * k_b + rvec[2] * k_a
    c12 = rvec[0] * k_b + rvec[3] * k_a
    c21 = rvec[1] * k_b + rvec[2] * k_a
    c22 = rvec[1] * k_b + rvec[3] * k_a

    e_a1, e_a2, e_b1, e_b2 = eps
    half = -v + c12 * e_a1 * e_b2 - c11 * e_a1 * e_b1 + c21 * e_a2 * e_b1 - c22 * e_a2 * e_b2
    return LyapunovReport(
        v=v,
        dv_dt_analytic=2.0 * half,
        epsilons=eps,
        c_coeffs=np.array([c11, c12, c21, c22]),
    )


def rescale_rewards_below(
    mf: MeanField, q0: QState | None = None, margin: float = 0.5
) -> tuple[MeanField, QState | None, float]:
    """Rescale rewards (and optionally a state) by c = margin * 2 gamma / R_max
    so that every reward drops below 2 gamma, the regime where dV/dt < 0 is
    guaranteed. The temperature is left unchanged, so this changes the flow;
    it produces a nearby problem on which the monotonicity certificate holds.
    """
    if not (0.0 < margin < 1.0):
        raise ValueError(f"margin must lie in (0, 1), got {margin!r}")
    c = margin * 2.0 * mf.gamma / mf.rewards.r_max
    scaled_mf = MeanField(mf.rewards.scaled(c), mf.gamma)
    scaled_q0 = q0.scaled(c) if q0 is not None else None
    return scaled_mf, scaled_q0, c
