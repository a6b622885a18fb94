"""Boltzmann (softmax) action selection over per-user Q-values."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .game import Channel, RewardMatrix, UserId


def boltzmann_channel1(q1: float, q2: float, gamma: float) -> float:
    """Probability of the first option under a two-way Boltzmann distribution.

    Computed with max-subtraction so that ratios |q1 - q2| / gamma up to ~1e4
    stay finite (gamma as small as 0.01 with Q near 1 gives exponents ~100).
    """
    m = q1 if q1 > q2 else q2
    e1 = math.exp((q1 - m) / gamma)
    e2 = math.exp((q2 - m) / gamma)
    return e1 / (e1 + e2)


@dataclass(frozen=True)
class PolicyParams:
    """Temperature and optional exploration floor.

    explore_floor clamps action probabilities into [floor, 1 - floor]; a floor
    of 0.5 or more would leave no room for preference between two actions.
    """

    gamma: float
    explore_floor: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"temperature gamma must be finite and > 0, got {self.gamma!r}")
        if not (0.0 <= self.explore_floor < 0.5):
            raise ValueError(f"explore_floor must lie in [0, 0.5), got {self.explore_floor!r}")


@dataclass(frozen=True)
class UserQ:
    """One user's Q-values for channels 1 and 2."""

    q1: float
    q2: float

    def __post_init__(self):
        if not (math.isfinite(self.q1) and math.isfinite(self.q2)):
            raise ValueError(f"Q-values must be finite, got ({self.q1!r}, {self.q2!r})")


def channel1_probability(q: UserQ, params: PolicyParams) -> float:
    """Probability of choosing channel 1, clamped by the exploration floor."""
    p = boltzmann_channel1(q.q1, q.q2, params.gamma)
    if params.explore_floor > 0.0:
        lo = params.explore_floor
        hi = 1.0 - params.explore_floor
        p = min(max(p, lo), hi)
    return p


def channel_probability(q: UserQ, params: PolicyParams, channel: Channel) -> float:
    """Probability of choosing the given channel; channel 2 is the exact
    complement of channel 1 so the two always sum to 1."""
    p1 = channel1_probability(q, params)
    return p1 if channel is Channel.CH1 else 1.0 - p1


def sample_action(q: UserQ, params: PolicyParams, rng) -> Channel:
    """Draw one action from the Boltzmann distribution.

    Consumes exactly one uniform variate from ``rng`` (reproducibility
    contract: callers may pre-draw the stream).
    """
    u = rng.random()
    return Channel.CH1 if u < channel1_probability(q, params) else Channel.CH2


def expected_reward(
    user: UserId,
    channel: Channel,
    q_opponent: UserQ,
    rewards: RewardMatrix,
    params: PolicyParams,
) -> float:
    """Expected reward for `user` choosing `channel` against a Boltzmann
    opponent: the reward times the probability the opponent takes the other
    channel. Only defined for a floorless policy."""
    if params.explore_floor != 0.0:
        raise ValueError("expected_reward requires explore_floor = 0")
    p_other = channel_probability(q_opponent, params, channel.other())
    return rewards.reward(user, channel) * p_other
