"""Egli path loss, inter-carrier attenuation, thermal noise and link SINR.

All per-link budgets are done in dB; every quantity is converted to watts
before it is summed or divided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BOLTZMANN = 1.380649e-23  # J/K

DEFAULT_FREQUENCIES_MHZ = tuple(208.0 + 2.0 * k for k in range(10))

# |k - k~| -> attenuation in dB for spectral distances 0..4
_ICI_NEAR_DB = (0.0, 20.0, 40.0, 50.0, 60.0)
_ICI_CLOSE_DB = 95.0
_ICI_FAR_DB = 110.0
_ICI_RELATIVE_SPACING = 0.05


@dataclass(frozen=True)
class PropagationParams:
    boltzmann_constant: float = BOLTZMANN
    temperature: float = 290.0
    channel_bandwidth: float = 2e6
    noise_figure_db: float = 6.0
    carrier_frequencies: tuple[float, ...] = DEFAULT_FREQUENCIES_MHZ
    antenna_height_tx: float = 1.0
    antenna_height_rx: float = 1.0
    antenna_gain_tx: float = 1.0
    antenna_gain_rx: float = 1.0
    transmit_power_dbw: float = 2.0

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.carrier_frequencies)
        object.__setattr__(self, "carrier_frequencies", freqs)
        if len(freqs) < 1:
            raise ValueError("at least one carrier frequency is required")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValueError("carrier frequencies must be strictly increasing")
        if freqs[0] <= 0:
            raise ValueError("carrier frequencies must be positive")
        for name in ("antenna_height_tx", "antenna_height_rx", "antenna_gain_tx",
                     "antenna_gain_rx", "channel_bandwidth", "temperature",
                     "boltzmann_constant"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def n_channels(self) -> int:
        return len(self.carrier_frequencies)


@dataclass(frozen=True)
class LinkBudget:
    path_loss_db: float
    received_power_dbw: float
    interference_watts: float
    thermal_noise_watts: float
    sinr_db: float = field(init=False)

    def __post_init__(self):
        received = dbw_to_watts(self.received_power_dbw)
        sinr = received / (self.interference_watts + self.thermal_noise_watts)
        object.__setattr__(self, "sinr_db", 10.0 * math.log10(sinr))


def dbw_to_watts(dbw):
    return 10.0 ** (dbw / 10.0)


def watts_to_dbw(watts):
    return 10.0 * np.log10(watts)


def watts_to_dbm(watts):
    return 10.0 * np.log10(watts) + 30.0


def egli_path_loss(distance_m, carrier_mhz, h_tx=1.0, h_rx=1.0, g_tx=1.0, g_rx=1.0):
    """Egli path loss in dB.

    Accepts scalars or numpy arrays for ``distance_m`` and ``carrier_mhz``
    (broadcast together); the remaining arguments are scalars.
    """
    d = np.asarray(distance_m, dtype=float)
    f = np.asarray(carrier_mhz, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    if np.any(f <= 0):
        raise ValueError("carrier frequency must be positive")
    if h_tx <= 0 or h_rx <= 0 or g_tx <= 0 or g_rx <= 0:
        raise ValueError("antenna heights and gains must be positive")
    loss = (40.0 * np.log10(d) - 20.0 * np.log10(40.0 / f)
            - 20.0 * math.log10(h_tx * h_rx) - 10.0 * math.log10(g_tx * g_rx))
    if loss.ndim == 0:
        return float(loss)
    return loss


def ici_attenuation(k: int, k_tilde: int, freqs=DEFAULT_FREQUENCIES_MHZ) -> float:
    """Attenuation (dB) seen on channel ``k`` from a transmitter on ``k_tilde``.

    Channel indices are 0-based. The relative spacing test is normalized by
    the frequency of ``k``, the channel of interest.
    """
    n = len(freqs)
    if not (0 <= k < n and 0 <= k_tilde < n):
        raise ValueError(f"channel index out of range: ({k}, {k_tilde}) for K={n}")
    gap = abs(k - k_tilde)
    if gap < len(_ICI_NEAR_DB):
        return _ICI_NEAR_DB[gap]
    if abs(freqs[k] - freqs[k_tilde]) / freqs[k] <= _ICI_RELATIVE_SPACING:
        return _ICI_CLOSE_DB
    return _ICI_FAR_DB


def ici_matrix_db(freqs=DEFAULT_FREQUENCIES_MHZ) -> np.ndarray:
    n = len(freqs)
    return np.array([[ici_attenuation(k, kt, freqs) for kt in range(n)] for k in range(n)])


def thermal_noise(params: PropagationParams) -> tuple[float, float]:
    """Receiver noise floor as ``(watts, dBm)``."""
    ktb = params.boltzmann_constant * params.temperature * params.channel_bandwidth
    watts = ktb * 10.0 ** (params.noise_figure_db / 10.0)
    dbm = 10.0 * math.log10(ktb) + params.noise_figure_db + 30.0
    return watts, dbm


def _distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _received_dbw(params: PropagationParams, tx_xy, rx_xy, channel_k: int) -> tuple[float, float]:
    pl = egli_path_loss(_distance(tx_xy, rx_xy), params.carrier_frequencies[channel_k],
                        params.antenna_height_tx, params.antenna_height_rx,
                        params.antenna_gain_tx, params.antenna_gain_rx)
    return pl, params.transmit_power_dbw - pl


def pair_sinr(scenario, assignment, tx_user, rx_user, channel_k: int,
              params: PropagationParams | None = None) -> LinkBudget:
    """Link budget for ``tx_user -> rx_user`` on ``channel_k``.

    Users are ``(network, user)`` index pairs. Every user of every other
    network transmits on that network's assigned channel and leaks into
    ``channel_k`` through the ICI attenuation table. This is the scalar
    reference path; :mod:`carlton.observation` holds the vectorized one.
    """
    params = params or PropagationParams()
    (n_tx, i), (n_rx, j) = tx_user, rx_user
    if n_tx != n_rx:
        raise ValueError("transmitter and receiver must belong to the same network")
    if i == j:
        raise ValueError("transmitter and receiver must be distinct users")
    freqs = params.carrier_frequencies
    if not 0 <= channel_k < len(freqs):
        raise ValueError(f"channel {channel_k} out of range")
    users = scenario.networks[n_rx].users
    rx_xy = users[j]
    pl, pr_dbw = _received_dbw(params, users[i], rx_xy, channel_k)

    interference = 0.0
    for l, net in enumerate(scenario.networks):
        if l == n_rx:
            continue
        atten = ici_attenuation(channel_k, assignment[l], freqs)
        for m_xy in net.users:
            _, p = _received_dbw(params, m_xy, rx_xy, channel_k)
            interference += 10.0 ** ((p - atten) / 10.0)

    noise_w, _ = thermal_noise(params)
    return LinkBudget(pl, pr_dbw, interference, noise_w)
