"""Reference policies: random agent, JAR and the centralized optimum."""

from __future__ import annotations

import numpy as np

from .observation import DEFAULT_SINR_TARGET_DB, LinkTable
from .propagation import PropagationParams

JAR_MARGIN = 0.05
JAR_STEP_MHZ = 2.0
EXHAUSTIVE_LIMIT = 10 ** 7
DEFAULT_NODE_BUDGET = 2_000_000


class SearchBudgetError(RuntimeError):
    """The exact centralized search is too large; use mode='heuristic'."""


def random_agent_init(rng: np.random.Generator, k_channels: int) -> int:
    return int(rng.integers(k_channels))


def jar_step(qv, current_channel: int, freqs) -> int:
    """Move to an adjacent (+-2 MHz) channel only for a quality gain of at least 0.05."""
    k = len(qv)
    adjacent = [c for c in (current_channel - 1, current_channel + 1)
                if 0 <= c < k and abs(freqs[c] - freqs[current_channel]) <= JAR_STEP_MHZ + 1e-9]
    if not adjacent:
        return current_channel
    best = max(adjacent, key=lambda c: qv[c])
    if len(adjacent) == 2 and qv[adjacent[0]] == qv[adjacent[1]]:
        return current_channel
    # small slack so 0.05-exact gains on a 1/M grid are not lost to rounding
    if qv[best] - qv[current_channel] >= JAR_MARGIN - 1e-12:
        return best
    return current_channel


def _quality_on_assigned(table: LinkTable, assignments: np.ndarray, sinr_target_db: float,
                         active: np.ndarray | None = None) -> np.ndarray:
    """(C, N) quality of each network on its own channel, for a batch of assignments.

    ``active`` (N,) restricts which networks transmit; inactive ones add no
    interference.
    """
    a = np.asarray(assignments, dtype=int)
    if a.ndim == 1:
        a = a[None, :]
    n_nets = table.n_networks
    out = np.empty(a.shape, dtype=float)
    tx = np.ones(n_nets) if active is None else np.asarray(active, dtype=float)
    for n, s in enumerate(table.slices):
        kn = a[:, n]
        gains = table.atten_watts[kn[:, None], a] * tx[None, :]  # (C, N)
        gains[:, n] = 0.0
        leak = table.leak[:, s, :][:, :, kn]  # (N, M, C)
        interference = np.einsum("lmc,cl->cm", leak, gains)
        sig = table.signal[s][:, kn].T  # (C, M)
        sinr = 10.0 * np.log10(sig / (table.noise_watts + interference))
        out[:, n] = (sinr > sinr_target_db).mean(axis=1)
    return out


def assignment_objective(table: LinkTable, assignment, sinr_target_db: float = DEFAULT_SINR_TARGET_DB) -> float:
    return float(_quality_on_assigned(table, assignment, sinr_target_db)[0].mean())


def _exhaustive(table: LinkTable, sinr_target_db: float, chunk: int = 50_000):
    k, n = table.n_channels, table.n_networks
    best_val, best = -1.0, None
    total = k ** n
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        # row-major digits: network 0 is the most significant
        digits = (idx[:, None] // (k ** np.arange(n - 1, -1, -1))[None, :]) % k
        vals = _quality_on_assigned(table, digits, sinr_target_db).mean(axis=1)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best = float(vals[i]), digits[i]
    return [int(c) for c in best], best_val


def _branch_and_bound(table: LinkTable, sinr_target_db: float, node_budget: int):
    k, n = table.n_channels, table.n_networks
    # most-interfered networks first tightens the bound early
    order = list(np.argsort(-table.leak.sum(axis=(1, 2)), kind="stable"))
    best_val = -1.0
    best = None
    nodes = 0
    assignment = np.zeros(n, dtype=int)
    active = np.zeros(n)

    def bound_and_values():
        # quality of every network on every channel given only the active transmitters
        per_channel = np.empty((n, k))
        for m in range(n):
            trial = np.repeat(assignment[None, :], k, axis=0)
            trial[:, m] = np.arange(k)
            per_channel[m] = _quality_on_assigned(table, trial, sinr_target_db, active)[:, m]
        return per_channel

    def recurse(depth: int):
        nonlocal best_val, best, nodes
        nodes += 1
        if nodes > node_budget:
            raise SearchBudgetError(
                f"exact search exceeded {node_budget} nodes for N={n}, K={k}; use mode='heuristic'")
        per_channel = bound_and_values()
        assigned = order[:depth]
        bound = sum(per_channel[m, assignment[m]] for m in assigned)
        bound += sum(per_channel[m].max() for m in order[depth:])
        if bound / n <= best_val:
            return
        if depth == n:
            best_val, best = bound / n, assignment.copy()
            return
        m = order[depth]
        for c in np.argsort(-per_channel[m], kind="stable"):
            assignment[m] = c
            active[m] = 1.0
            recurse(depth + 1)
            active[m] = 0.0
        assignment[m] = 0

    recurse(0)
    return [int(c) for c in best], best_val


def _heuristic(table: LinkTable, sinr_target_db: float, sweeps: int = 5):
    """Greedy saturation-order assignment followed by coordinate ascent."""
    k, n = table.n_channels, table.n_networks
    order = list(np.argsort(-table.leak.sum(axis=(1, 2)), kind="stable"))
    assignment = np.zeros(n, dtype=int)
    active = np.zeros(n)
    for m in order:
        trial = np.repeat(assignment[None, :], k, axis=0)
        trial[:, m] = np.arange(k)
        active[m] = 1.0
        vals = _quality_on_assigned(table, trial, sinr_target_db, active).mean(axis=1)
        assignment[m] = int(np.argmax(vals))
    value = assignment_objective(table, assignment, sinr_target_db)
    for _ in range(sweeps):
        improved = False
        for m in order:
            trial = np.repeat(assignment[None, :], k, axis=0)
            trial[:, m] = np.arange(k)
            vals = _quality_on_assigned(table, trial, sinr_target_db).mean(axis=1)
            c = int(np.argmax(vals))
            if vals[c] > value + 1e-12:
                assignment[m], value, improved = c, float(vals[c]), True
        if not improved:
            break
    return [int(c) for c in assignment], value


def centralized_optimum(scenario, params: PropagationParams | None = None,
                        sinr_target_db: float = DEFAULT_SINR_TARGET_DB, mode: str = "exact",
                        node_budget: int = DEFAULT_NODE_BUDGET, table: LinkTable | None = None):
    """Assignment maximizing the mean on-channel quality over all networks.

    ``mode='exact'`` enumerates every assignment when K^N <= 1e7 and falls
    back to branch-and-bound otherwise. Returns ``(assignment, objective)``.
    """
    table = table or LinkTable(scenario, params)
    if mode == "heuristic":
        return _heuristic(table, sinr_target_db)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if table.n_channels ** table.n_networks <= EXHAUSTIVE_LIMIT:
        return _exhaustive(table, sinr_target_db)
    return _branch_and_bound(table, sinr_target_db, node_budget)


class RandomAgentPolicy:
    name = "ra"

    def reset(self, scenario, table, initial, rng) -> None:
        pass

    def decide(self, network_n, qv, current, rng) -> int:
        return current


class JarPolicy:
    name = "jar"

    def reset(self, scenario, table, initial, rng) -> None:
        self.freqs = table.params.carrier_frequencies

    def decide(self, network_n, qv, current, rng) -> int:
        return jar_step(qv, current, self.freqs)


class CentralizedPolicy:
    """Moves every network to its slot of the centralized optimum at its first turn."""

    name = "centralized"

    def __init__(self, sinr_target_db: float = DEFAULT_SINR_TARGET_DB, mode: str = "exact"):
        self.sinr_target_db = sinr_target_db
        self.mode = mode

    def reset(self, scenario, table, initial, rng) -> None:
        self.assignment, self.objective = centralized_optimum(
            scenario, sinr_target_db=self.sinr_target_db, mode=self.mode, table=table)

    def decide(self, network_n, qv, current, rng) -> int:
        return self.assignment[network_n]
