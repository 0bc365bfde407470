"""Action masking, Exp3-style behavior policy, exploration schedule and the greedy CARLTON policy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .neural import MlpParameters, forward
from .observation import encode_state

HOLD = "HOLD"

EPSILON_START = 0.5
EPSILON_END = 0.01


@dataclass(frozen=True)
class PolicyParams:
    alpha: float = 0.0
    beta: float = 1.0
    epsilon_b: float = EPSILON_START
    phi_threshold: float | None = None
    mode: Literal["train", "greedy"] = "train"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not 0.0 <= self.epsilon_b <= 1.0:
            raise ValueError("epsilon_b must be in [0, 1]")
        if self.mode not in ("train", "greedy"):
            raise ValueError(f"unknown mode {self.mode!r}")


def mask_q(q_values, qv, previous_action: int | None = None):
    """Set the value of every zero-quality channel to -inf.

    Returns `HOLD` when no channel has any quality; the caller then keeps
    ``previous_action``.
    """
    qv = np.asarray(qv)
    if not np.any(qv > 0):
        return HOLD
    return np.where(qv == 0, -np.inf, np.asarray(q_values, dtype=float))


def behavior_probabilities(masked_q, alpha: float = 0.0, beta: float = 1.0) -> np.ndarray:
    q = np.asarray(masked_q, dtype=float)
    allowed = np.isfinite(q)
    if not allowed.any():
        raise ValueError("all channels are masked; mask_q should have returned HOLD")
    z = np.where(allowed, beta * q, -np.inf)
    z = z - z[allowed].max()
    e = np.where(allowed, np.exp(z), 0.0)
    soft = e / e.sum()
    # uniform exploration mass spread over the unmasked channels only
    return (1.0 - alpha) * soft + alpha * allowed / allowed.sum()


def sample_action(masked_q, alpha: float, beta: float, rng: np.random.Generator) -> int:
    p = behavior_probabilities(masked_q, alpha, beta)
    return int(rng.choice(len(p), p=p))


def greedy_action(masked_q) -> int:
    # np.argmax picks the lowest index on ties
    return int(np.argmax(masked_q))


def select_action(state, qv, params: PolicyParams, net: MlpParameters,
                  rng: np.random.Generator, previous_action: int) -> int:
    masked = mask_q(forward(net, state), qv, previous_action)
    if masked is HOLD:
        return previous_action
    eps = 0.0 if params.mode == "greedy" else params.epsilon_b
    if eps > 0.0 and rng.random() < eps:
        return sample_action(masked, params.alpha, params.beta, rng)
    return greedy_action(masked)


def epsilon_schedule(episode_i: int, total_b: int, start: float = EPSILON_START,
                     end: float = EPSILON_END) -> float:
    """Linear anneal from ``start`` (episode 1) to ``end`` (episode B/2), flat afterwards."""
    if not 1 <= episode_i <= total_b:
        raise ValueError(f"episode {episode_i} outside 1..{total_b}")
    half = total_b / 2.0
    if episode_i >= half:
        return end
    frac = (episode_i - 1) / (half - 1.0)
    return start + (end - start) * frac


def post_process(current_cq: float, proposed_cq: float, phi: float | None) -> bool:
    """True to switch to the proposed channel, False to keep the current one."""
    if phi is None:
        return True
    return proposed_cq - current_cq > phi * current_cq


class CarltonPolicy:
    """Greedy execution of a trained value network, optionally with the phi filter."""

    def __init__(self, net: MlpParameters, phi: float | None = None, name: str | None = None):
        self.net = net
        self.phi = phi
        self.name = name or ("carlton" if phi is None else f"carlton_phi={phi:g}")
        self._params = PolicyParams(phi_threshold=phi, mode="greedy")

    def reset(self, scenario, table, initial, rng) -> None:
        if table.n_channels != self.net.n_channels:
            raise ValueError(f"checkpoint expects K={self.net.n_channels}, scenario has K={table.n_channels}")

    def decide(self, network_n: int, qv: np.ndarray, current: int, rng) -> int:
        proposed = select_action(encode_state(current, qv), qv, self._params, self.net, rng, current)
        if proposed != current and not post_process(qv[current], qv[proposed], self.phi):
            return current
        return proposed
