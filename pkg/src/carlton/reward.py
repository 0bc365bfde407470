"""Personal, social-welfare and combined rewards."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class RewardParams:
    zeta: float = 0.9
    r_desired: float = 4.0
    c1: float = 1.1
    rho: float = 0.7
    gamma_neighbor_m: float = 500.0

    def __post_init__(self):
        if not 0.0 < self.zeta <= 1.0:
            raise ValueError("zeta must be in (0, 1]")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must be in [0, 1]")
        if self.c1 <= 1.0:
            raise ValueError("c1 must be > 1")


def personal_reward(qv, action_t: int, action_prev: int, params: RewardParams = RewardParams()) -> float:
    """Rank-based reward for the chosen channel, boosted by c1 when the channel is kept.

    Channels are 0-based. Below the zeta threshold the reward is
    ``2 * (i / K - 0.5)`` where ``i`` is the number of channels whose quality
    does not exceed the chosen one's.
    """
    k = len(qv)
    if not (0 <= action_t < k and 0 <= action_prev < k):
        raise ValueError(f"channel out of range for K={k}: {action_t}, {action_prev}")
    v = qv[action_t]
    if v >= params.zeta:
        r = params.r_desired
    else:
        sqv = sorted(qv)
        i = 0
        # stops at i == K when v is the maximum
        while i < k and v >= sqv[i]:
            i += 1
        r = 2.0 * (i / k - 0.5)
    if action_t == action_prev:
        r *= params.c1
    return r


def neighbors(centers, network_i: int, gamma_m: float) -> set[int]:
    cx, cy = centers[network_i]
    return {j for j, (x, y) in enumerate(centers)
            if j != network_i and math.hypot(x - cx, y - cy) <= gamma_m}


def neighbor_table(centers, gamma_m: float) -> list[set[int]]:
    return [neighbors(centers, i, gamma_m) for i in range(len(centers))]


def social_welfare_reward(neighbor_personal_rewards) -> float:
    """Running mean of the neighbors' personal rewards; 0 with no neighbors."""
    n = 0
    r_sw = 0.0
    for r in neighbor_personal_rewards:
        n += 1
        r_sw = ((n - 1) * r_sw + r) / n
    return r_sw


def total_reward(r_p: float, r_sw: float, rho: float) -> float:
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0, 1]")
    return rho * r_p + (1.0 - rho) * r_sw
