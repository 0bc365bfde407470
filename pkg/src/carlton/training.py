"""Centralized training of the shared value network from sequential multi-network episodes."""

from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import agent
from .agent import PolicyParams, mask_q, HOLD
from .metrics import EpisodeReport
from .neural import AdamParams, MlpParameters, TrainBatch, TrainingDivergenceError, forward, train_step
from .observation import LinkTable, encode_state
from .propagation import PropagationParams
from .reward import RewardParams, neighbor_table, personal_reward, total_reward
from .scenario import ScenarioParams, generate_scenario

LOG_COLUMNS = ("episode", "n_networks", "epsilon_b", "accumulated_reward", "cq_mean", "cq_median",
               "cq_min", "anccs", "cts", "ses", "ws", "loss_mean", "loss_max")


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    episodes: int = 1000
    decision_points: int = 20
    updates_per_episode: int = 40
    gamma: float = 0.9
    batch_size: int = 32
    replay_size: int = 100_000
    train_networks_min: int = 2
    train_networks_max: int = 7
    huber_delta: float = 1.0
    omega_first_half: float = 0.02
    omega_second_half: float = 0.2
    learning_rate_first_half: float = 2.5e-4
    learning_rate_second_half: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-7
    hidden_units: int = 128
    alpha: float = 0.0
    beta: float = 1.0
    epsilon_start: float = 0.5
    epsilon_end: float = 0.01
    masking: bool = True
    zeta: float = 0.9
    r_desired: float = 4.0
    c1: float = 1.1
    rho: float = 0.7
    gamma_neighbor_m: float = 500.0
    sinr_target_db: float = 4.0
    n_channels: int = 10
    carrier_start_mhz: float = 208.0
    carrier_step_mhz: float = 2.0
    transmit_power_dbw: float = 2.0
    antenna_height_tx: float = 1.0
    antenna_height_rx: float = 1.0
    antenna_gain_tx: float = 1.0
    antenna_gain_rx: float = 1.0
    temperature: float = 290.0
    channel_bandwidth: float = 2e6
    noise_figure_db: float = 6.0
    u1: float = 400.0
    x1: float = 50.0
    x2: float = 500.0
    user_spread_std: float = 50.0
    users_min: int = 2
    users_max: int = 15
    checkpoint_every: int = 0

    def __post_init__(self):
        for name in ("episodes", "decision_points", "updates_per_episode", "batch_size",
                     "replay_size", "hidden_units", "n_channels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 1 <= self.train_networks_min <= self.train_networks_max:
            raise ValueError("train_networks_min must be in [1, train_networks_max]")
        # delegate range checks to the component parameter classes
        self.propagation()
        self.scenario_params()
        self.reward_params()
        self.policy_params()

    def propagation(self) -> PropagationParams:
        freqs = tuple(self.carrier_start_mhz + self.carrier_step_mhz * k for k in range(self.n_channels))
        return PropagationParams(
            temperature=self.temperature, channel_bandwidth=self.channel_bandwidth,
            noise_figure_db=self.noise_figure_db, carrier_frequencies=freqs,
            antenna_height_tx=self.antenna_height_tx, antenna_height_rx=self.antenna_height_rx,
            antenna_gain_tx=self.antenna_gain_tx, antenna_gain_rx=self.antenna_gain_rx,
            transmit_power_dbw=self.transmit_power_dbw)

    def scenario_params(self) -> ScenarioParams:
        return ScenarioParams(self.u1, self.x1, self.x2, self.user_spread_std,
                              (self.users_min, self.users_max))

    def reward_params(self) -> RewardParams:
        return RewardParams(self.zeta, self.r_desired, self.c1, self.rho, self.gamma_neighbor_m)

    def policy_params(self, epsilon_b: float | None = None) -> PolicyParams:
        eps = self.epsilon_start if epsilon_b is None else epsilon_b
        return PolicyParams(self.alpha, self.beta, eps, None, "train")

    def first_half(self, episode_i: int) -> bool:
        return episode_i <= self.episodes / 2

    def epsilon(self, episode_i: int) -> float:
        return agent.epsilon_schedule(episode_i, self.episodes, self.epsilon_start, self.epsilon_end)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise KeyError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**doc)


@dataclass
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray


class ReplayMemory:
    """Fixed-capacity FIFO of transitions backed by preallocated arrays."""

    def __init__(self, capacity: int, state_dim: int):
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.next_states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self._next = 0
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def add(self, tr: Transition) -> None:
        i = self._next
        self.states[i] = tr.state
        self.actions[i] = tr.action
        self.rewards[i] = tr.reward
        self.next_states[i] = tr.next_state
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def extend(self, transitions) -> None:
        for tr in transitions:
            self.add(tr)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(self._size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> TrainBatch:
        idx = self.sample_indices(batch_size, rng)
        return TrainBatch(self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx])


@dataclass
class EpisodeOutcome:
    transitions: list[list[Transition]]
    accumulated_reward: float
    report: EpisodeReport
    order: list[int]
    decisions: int
    ledger: list[tuple[int, float]]


def _choose(net, state, qv, current, policy: PolicyParams, masking: bool, rng) -> int:
    q = forward(net, state)
    if masking:
        masked = mask_q(q, qv, current)
        if masked is HOLD:
            return current
    else:
        masked = q
    if policy.epsilon_b > 0.0 and rng.random() < policy.epsilon_b:
        return agent.sample_action(masked, policy.alpha, policy.beta, rng)
    return agent.greedy_action(masked)


def run_episode(scenario, net: MlpParameters, config: TrainConfig, rng: np.random.Generator,
                epsilon_b: float | None = None, table: LinkTable | None = None,
                initial=None) -> EpisodeOutcome:
    """Play one training episode and collect each network's transitions.

    Networks act once per round in a random serial order. A network's
    transition is closed at its next turn, with reward
    ``rho * r_p + (1 - rho) * mean(neighbor r_p since its previous turn)``.
    """
    table = table or LinkTable(scenario, config.propagation())
    n_nets, k = scenario.n_networks, table.n_channels
    order = [int(n) for n in rng.permutation(n_nets)]
    if initial is None:
        initial = rng.integers(k, size=n_nets)
    assignment = [int(c) for c in initial]
    policy = config.policy_params(epsilon_b)
    rparams = config.reward_params()
    nbrs = neighbor_table(scenario.centers, rparams.gamma_neighbor_m)

    ledger: list[tuple[int, float]] = []  # (network, r_p) in decision order
    pending: list[tuple | None] = [None] * n_nets  # (state, action, r_p, ledger position)
    memories = [deque(maxlen=config.decision_points) for _ in range(n_nets)]
    totals = [0.0] * n_nets
    counts = [0] * n_nets
    last_change = 0
    step = 0

    def close(n: int) -> tuple:
        s_prev, a_prev, rp_prev, pos = pending[n]
        window = [r for (m, r) in ledger[pos + 1:] if m in nbrs[n]]
        r_sw = sum(window) / len(window) if window else 0.0
        return s_prev, a_prev, total_reward(rp_prev, r_sw, rparams.rho)

    for _ in range(config.decision_points):
        for n in order:
            qv = table.quality_vector(assignment, n, config.sinr_target_db)
            state = encode_state(assignment[n], qv)
            if pending[n] is not None:
                s_prev, a_prev, r = close(n)
                memories[n].append(Transition(s_prev, a_prev, r, state))
                totals[n] += r
            current = assignment[n]
            a = _choose(net, state, qv, current, policy, config.masking, rng)
            r_p = personal_reward(qv, a, current, rparams)
            if a != current:
                counts[n] += 1
                last_change = step
                assignment[n] = a
            ledger.append((n, r_p))
            pending[n] = (state, a, r_p, len(ledger) - 1)
            step += 1

    # the last turn of each network is scored but has no successor state to store
    for n in range(n_nets):
        totals[n] += close(n)[2]

    final_qvs = table.all_quality_vectors(assignment, config.sinr_target_db)
    report = EpisodeReport(final_qvs, assignment, counts, last_change, config.decision_points)
    return EpisodeOutcome([list(m) for m in memories], float(np.mean(totals)), report, order, step, ledger)


def train(config: TrainConfig, net: MlpParameters | None = None, on_episode=None,
          on_checkpoint=None, stop_after: int | None = None):
    """Run the full training procedure; returns ``(net, log_rows)``.

    ``on_episode(row)`` is called after every episode, ``on_checkpoint(net,
    episode)`` every ``config.checkpoint_every`` episodes. ``stop_after``
    truncates the run without changing the B-based schedules.
    """
    rng = np.random.default_rng(config.seed)
    k = config.n_channels
    net = net or MlpParameters(k, config.hidden_units, rng=rng)
    grm = ReplayMemory(config.replay_size, 2 * k)
    prop, sparams = config.propagation(), config.scenario_params()
    rows = []
    last = config.episodes if stop_after is None else min(stop_after, config.episodes)
    for i in range(1, last + 1):
        n_nets = int(rng.integers(config.train_networks_min, config.train_networks_max + 1))
        scenario = generate_scenario(n_nets, sparams, int(rng.integers(2 ** 31)))
        table = LinkTable(scenario, prop)
        eps = config.epsilon(i)
        outcome = run_episode(scenario, net, config, rng, eps, table)
        for mem in outcome.transitions:
            grm.extend(mem)

        first = config.first_half(i)
        omega = config.omega_first_half if first else config.omega_second_half
        opt = AdamParams(config.learning_rate_first_half if first else config.learning_rate_second_half,
                         config.adam_beta1, config.adam_beta2, config.adam_epsilon)
        losses = []
        if len(grm) >= config.batch_size:
            for _ in range(config.updates_per_episode):
                batch = grm.sample(config.batch_size, rng)
                try:
                    _, loss = train_step(net, batch, config.gamma, omega, opt, config.huber_delta)
                except TrainingDivergenceError as exc:
                    raise TrainingDivergenceError(f"episode {i}: {exc}") from exc
                losses.append(loss)

        rep = outcome.report
        row = {"episode": i, "n_networks": n_nets, "epsilon_b": eps,
               "accumulated_reward": outcome.accumulated_reward,
               "cq_mean": rep.cq_mean, "cq_median": rep.cq_median, "cq_min": rep.cq_min,
               "anccs": rep.anccs, "cts": rep.cts, "ses": rep.ses, "ws": rep.ws,
               "loss_mean": float(np.mean(losses)) if losses else float("nan"),
               "loss_max": float(np.max(losses)) if losses else float("nan")}
        rows.append(row)
        if on_episode:
            on_episode(row)
        if on_checkpoint and config.checkpoint_every and i % config.checkpoint_every == 0:
            on_checkpoint(net, i)
    return net, rows
