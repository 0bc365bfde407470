"""Per-network SINR matrices, binary quality matrices and quality vectors.

`LinkTable` precomputes every user-to-user received power of a scenario once,
so a full K-channel sensing sweep for one network is a handful of array ops.
The scalar `user_average_sinr` goes through `pair_sinr` and is kept as the
reference path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .propagation import PropagationParams, egli_path_loss, ici_matrix_db, pair_sinr, thermal_noise

DEFAULT_SINR_TARGET_DB = 4.0


class DegenerateNetworkError(ValueError):
    """A network with a single user has no peer links to average over."""


@dataclass(frozen=True)
class Observation:
    sinr_matrix: np.ndarray  # (M, K) user-average SINR in dB
    bsinr: np.ndarray  # (M, K) 0/1
    quality_vector: np.ndarray  # (K,)
    sinr_target_db: float


@dataclass(frozen=True)
class AgentState:
    cbr: np.ndarray
    qv: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.cbr, self.qv])


def user_average_sinr(scenario, assignment, network_n: int, user_j: int, channel_k: int,
                      params: PropagationParams | None = None) -> float:
    """Linear-power mean of the SINR of all peer links into ``user_j``, in dB."""
    m = scenario.networks[network_n].user_count
    if m < 2:
        raise DegenerateNetworkError(f"network {network_n} has {m} user(s); need at least 2")
    links = [pair_sinr(scenario, assignment, (network_n, i), (network_n, user_j), channel_k, params).sinr_db
             for i in range(m) if i != user_j]
    return linear_mean_db(links)


def linear_mean_db(values_db) -> float:
    """Mean of dB quantities taken in linear power, returned in dB."""
    lin = [10.0 ** (v / 10.0) for v in values_db]
    return 10.0 * math.log10(sum(lin) / len(lin))


def quality_from_sinr(sinr_db: np.ndarray, sinr_target_db: float) -> np.ndarray:
    return (np.asarray(sinr_db) > sinr_target_db).mean(axis=0)


class LinkTable:
    """Precomputed received powers (watts) for one scenario."""

    def __init__(self, scenario, params: PropagationParams | None = None):
        self.params = params = params or PropagationParams()
        self.n_networks = scenario.n_networks
        self.n_channels = params.n_channels
        counts = [net.user_count for net in scenario.networks]
        for n, m in enumerate(counts):
            if m < 2:
                raise DegenerateNetworkError(f"network {n} has {m} user(s); need at least 2")
        pts = np.array([u for net in scenario.networks for u in net.users], dtype=float)
        self.user_network = np.repeat(np.arange(self.n_networks), counts)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        self.slices = [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

        n_users = len(pts)
        dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        np.fill_diagonal(dist, 1.0)  # placeholder, zeroed below
        freqs = np.asarray(params.carrier_frequencies)
        pl = egli_path_loss(dist[:, :, None], freqs[None, None, :],
                            params.antenna_height_tx, params.antenna_height_rx,
                            params.antenna_gain_tx, params.antenna_gain_rx)
        # rx_watts[tx, rx, k]
        rx_watts = 10.0 ** ((params.transmit_power_dbw - pl) / 10.0)
        rx_watts[np.arange(n_users), np.arange(n_users), :] = 0.0
        self.rx_watts = rx_watts

        # mean peer signal into each receiver: (U, K)
        own = self.user_network[:, None] == self.user_network[None, :]
        peers = np.array(counts)[self.user_network] - 1
        self.signal = (rx_watts * own[:, :, None]).sum(axis=0) / peers[:, None]
        # leak[l, rx, k]: total power from network l's users into rx on channel k
        self.leak = np.stack([rx_watts[s].sum(axis=0) for s in self.slices])
        self.foreign = (np.arange(self.n_networks)[:, None] != self.user_network[None, :]).astype(float)
        self.atten_watts = 10.0 ** (-ici_matrix_db(params.carrier_frequencies) / 10.0)
        self.noise_watts = thermal_noise(params)[0]

    def interference(self, assignment, users=slice(None)) -> np.ndarray:
        """Interference (watts) at each receiver for every candidate channel, shape (U, K)."""
        c = np.asarray(assignment, dtype=int)
        # gain[l, k] = attenuation on channel k from network l transmitting on c[l]
        gain = self.atten_watts[:, c].T
        leak = self.leak[:, users, :] * self.foreign[:, users, None]
        return np.einsum("luk,lk->uk", leak, gain)

    def sinr_matrix(self, assignment, network_n: int) -> np.ndarray:
        s = self.slices[network_n]
        sinr = self.signal[s] / (self.noise_watts + self.interference(assignment, s))
        return 10.0 * np.log10(sinr)

    def observe(self, assignment, network_n: int, sinr_target_db: float = DEFAULT_SINR_TARGET_DB) -> Observation:
        sinr = self.sinr_matrix(assignment, network_n)
        bsinr = (sinr > sinr_target_db).astype(np.int8)
        return Observation(sinr, bsinr, bsinr.mean(axis=0), sinr_target_db)

    def quality_vector(self, assignment, network_n: int,
                       sinr_target_db: float = DEFAULT_SINR_TARGET_DB) -> np.ndarray:
        return quality_from_sinr(self.sinr_matrix(assignment, network_n), sinr_target_db)

    def all_quality_vectors(self, assignment, sinr_target_db: float = DEFAULT_SINR_TARGET_DB) -> np.ndarray:
        """(N, K) quality vectors of every network under one assignment."""
        sinr = 10.0 * np.log10(self.signal / (self.noise_watts + self.interference(assignment)))
        above = sinr > sinr_target_db
        return np.stack([above[s].mean(axis=0) for s in self.slices])

    def isolated_quality(self, sinr_target_db: float = DEFAULT_SINR_TARGET_DB) -> np.ndarray:
        """(N, K) quality vectors with no foreign interference at all."""
        sinr = 10.0 * np.log10(self.signal / self.noise_watts)
        above = sinr > sinr_target_db
        return np.stack([above[s].mean(axis=0) for s in self.slices])


def quality_vector(scenario, assignment, network_n: int,
                   sinr_target_db: float = DEFAULT_SINR_TARGET_DB,
                   params: PropagationParams | None = None) -> np.ndarray:
    return LinkTable(scenario, params).quality_vector(assignment, network_n, sinr_target_db)


def build_state(current_channel: int, qv) -> AgentState:
    qv = np.asarray(qv, dtype=float)
    k = len(qv)
    if not 0 <= current_channel < k:
        raise ValueError(f"channel {current_channel} out of range for K={k}")
    cbr = np.zeros(k)
    cbr[current_channel] = 1.0
    return AgentState(cbr, qv.copy())


def encode_state(current_channel: int, qv: np.ndarray) -> np.ndarray:
    """Flat 2K state vector; the hot-path twin of `build_state`."""
    k = len(qv)
    out = np.zeros(2 * k)
    out[current_channel] = 1.0
    out[k:] = qv
    return out
