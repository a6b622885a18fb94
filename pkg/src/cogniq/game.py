"""The 2x2 channel-selection game: two users, two channels, zero reward on collision."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np


class UserId(Enum):
    A = "A"
    B = "B"

    def other(self) -> "UserId":
        return UserId.B if self is UserId.A else UserId.A


class Channel(Enum):
    CH1 = 1
    CH2 = 2

    def other(self) -> "Channel":
        return Channel.CH2 if self is Channel.CH1 else Channel.CH1


@dataclass(frozen=True)
class RewardMatrix:
    """Per-user, per-channel rewards for a collision-free transmission.

    Entries must be strictly positive: a zero reward would make a channel
    indistinguishable from permanent collision and break the two-pure-equilibria
    structure of the game.
    """

    r_a1: float
    r_a2: float
    r_b1: float
    r_b2: float

    def __post_init__(self):
        for name in ("r_a1", "r_a2", "r_b1", "r_b2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be finite and strictly positive, got {v!r}")

    def reward(self, user: UserId, channel: Channel) -> float:
        if user is UserId.A:
            return self.r_a1 if channel is Channel.CH1 else self.r_a2
        return self.r_b1 if channel is Channel.CH1 else self.r_b2

    def as_vector(self) -> np.ndarray:
        """Rewards in (A1, A2, B1, B2) order."""
        return np.array([self.r_a1, self.r_a2, self.r_b1, self.r_b2])

    @property
    def r_max(self) -> float:
        return max(self.r_a1, self.r_a2, self.r_b1, self.r_b2)

    def scaled(self, c: float) -> "RewardMatrix":
        return RewardMatrix(c * self.r_a1, c * self.r_a2, c * self.r_b1, c * self.r_b2)


@dataclass(frozen=True)
class JointAction:
    action_a: Channel
    action_b: Channel


@dataclass(frozen=True)
class RewardSample:
    reward_a: float
    reward_b: float


def realize_rewards(actions: JointAction, rewards: RewardMatrix) -> RewardSample:
    """Realized rewards for one round: zero for both on collision, otherwise
    each user collects its own reward on its chosen channel."""
    if actions.action_a is actions.action_b:
        return RewardSample(0.0, 0.0)
    return RewardSample(
        rewards.reward(UserId.A, actions.action_a),
        rewards.reward(UserId.B, actions.action_b),
    )


def _payoff(user: UserId, actions: JointAction, rewards: RewardMatrix) -> float:
    if actions.action_a is actions.action_b:
        return 0.0
    return rewards.reward(user, actions.action_a if user is UserId.A else actions.action_b)


def nash_equilibria(rewards: RewardMatrix) -> set[JointAction]:
    """Pure-strategy Nash equilibria, found by exhaustive best-response check
    over the four joint actions.

    For any strictly positive reward matrix this is the two orthogonal
    (anti-coordination) outcomes.
    """
    equilibria = set()
    channels = (Channel.CH1, Channel.CH2)
    for ca in channels:
        for cb in channels:
            joint = JointAction(ca, cb)
            ua = _payoff(UserId.A, joint, rewards)
            ub = _payoff(UserId.B, joint, rewards)
            dev_a = _payoff(UserId.A, JointAction(ca.other(), cb), rewards)
            dev_b = _payoff(UserId.B, JointAction(ca, cb.other()), rewards)
            if ua >= dev_a and ub >= dev_b:
                equilibria.add(joint)
    return equilibria
