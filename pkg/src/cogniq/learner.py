"""Q-value update rule and step-size schedules; one independent learner per user."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import Channel, JointAction, RewardMatrix, RewardSample, UserId, realize_rewards
from .policy import PolicyParams, UserQ, sample_action

_SCHEDULE_KINDS = ("vanishing", "floored")


@dataclass(frozen=True)
class QState:
    """Joint Q-state (Q_A1, Q_A2, Q_B1, Q_B2).

    Doubles as the learner's live estimate and as the mean-field state. With
    initial entries in [0, R_max] and rewards bounded by R_max, every update is
    a convex combination, so the state never leaves that box.
    """

    q_a1: float
    q_a2: float
    q_b1: float
    q_b2: float

    def __post_init__(self):
        for name in ("q_a1", "q_a2", "q_b1", "q_b2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)!r}")

    def user_q(self, user: UserId) -> UserQ:
        if user is UserId.A:
            return UserQ(self.q_a1, self.q_a2)
        return UserQ(self.q_b1, self.q_b2)

    def as_array(self) -> np.ndarray:
        return np.array([self.q_a1, self.q_a2, self.q_b1, self.q_b2])

    @classmethod
    def from_array(cls, arr) -> "QState":
        a1, a2, b1, b2 = (float(x) for x in arr)
        return cls(a1, a2, b1, b2)

    def scaled(self, c: float) -> "QState":
        return QState(c * self.q_a1, c * self.q_a2, c * self.q_b1, c * self.q_b2)


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule: ``vanishing`` is alpha0/t (divergent sum, convergent
    square sum), ``floored`` clamps it from below for non-stationary use.

    index_by_selection switches the time index from the global round count to
    the per-(user, channel) selection count; callers must then thread selection
    counts through play_round.
    """

    kind: str
    alpha0: float
    floor: float = 0.0
    index_by_selection: bool = False

    def __post_init__(self):
        if self.kind not in _SCHEDULE_KINDS:
            raise ValueError(f"kind must be one of {_SCHEDULE_KINDS}, got {self.kind!r}")
        if not (0.0 < self.alpha0 <= 1.0):
            raise ValueError(f"alpha0 must lie in (0, 1], got {self.alpha0!r}")
        if not (0.0 <= self.floor < 1.0):
            raise ValueError(f"floor must lie in [0, 1), got {self.floor!r}")
        if self.kind == "vanishing" and self.floor != 0.0:
            raise ValueError("a vanishing schedule takes no floor")


def step_size(schedule: StepSchedule, t: int) -> float:
    """Step size at round t >= 1."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t!r}")
    alpha = schedule.alpha0 / t
    if schedule.kind == "floored" and alpha < schedule.floor:
        alpha = schedule.floor
    return alpha


@dataclass(frozen=True)
class LearnerConfig:
    schedule: StepSchedule
    policy: PolicyParams
    q_init: QState


def q_update(q: QState, actions: JointAction, rewards: RewardSample, alpha: float) -> QState:
    """One update of both users' Q-values.

    Each user's chosen-channel entry moves to (1 - alpha) * Q + alpha * r; the
    unchosen entry is frozen (its step size is zero when not selected).
    """
    if not (0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    return _update_pair(q, actions, rewards, alpha, alpha)


def _update_pair(
    q: QState, actions: JointAction, rewards: RewardSample, alpha_a: float, alpha_b: float
) -> QState:
    q_a1, q_a2, q_b1, q_b2 = q.q_a1, q.q_a2, q.q_b1, q.q_b2
    if actions.action_a is Channel.CH1:
        q_a1 = (1.0 - alpha_a) * q_a1 + alpha_a * rewards.reward_a
    else:
        q_a2 = (1.0 - alpha_a) * q_a2 + alpha_a * rewards.reward_a
    if actions.action_b is Channel.CH1:
        q_b1 = (1.0 - alpha_b) * q_b1 + alpha_b * rewards.reward_b
    else:
        q_b2 = (1.0 - alpha_b) * q_b2 + alpha_b * rewards.reward_b
    return QState(q_a1, q_a2, q_b1, q_b2)


def play_round(
    q: QState,
    rewards: RewardMatrix,
    t: int,
    rng,
    config_a: LearnerConfig,
    config_b: LearnerConfig | None = None,
    selection_counts: tuple[int, int, int, int] | None = None,
) -> tuple[QState, JointAction, RewardSample]:
    """One round of independent play: both users sample from their own
    Boltzmann policies (A first, then B -- fixed order for reproducibility),
    rewards are realized, and each user's chosen entry is updated.

    selection_counts holds prior (A1, A2, B1, B2) selection counts and is
    required only for index_by_selection schedules; the caller updates the
    counts from the returned actions.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t!r}")
    if config_b is None:
        config_b = config_a

    action_a = sample_action(q.user_q(UserId.A), config_a.policy, rng)
    action_b = sample_action(q.user_q(UserId.B), config_b.policy, rng)
    actions = JointAction(action_a, action_b)
    sample = realize_rewards(actions, rewards)

    alpha_a = _round_alpha(config_a.schedule, t, selection_counts, 0 if action_a is Channel.CH1 else 1)
    alpha_b = _round_alpha(config_b.schedule, t, selection_counts, 2 if action_b is Channel.CH1 else 3)
    return _update_pair(q, actions, sample, alpha_a, alpha_b), actions, sample


def _round_alpha(schedule, t, selection_counts, chosen_index):
    if not schedule.index_by_selection:
        return step_size(schedule, t)
    if selection_counts is None:
        raise ValueError("index_by_selection schedules need selection_counts")
    return step_size(schedule, selection_counts[chosen_index] + 1)
