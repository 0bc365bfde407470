"""Episode scoring (CQ statistics, ANCCS, CTS, SES, WS) and the paired evaluation grid."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .observation import DEFAULT_SINR_TARGET_DB, LinkTable
from .propagation import PropagationParams
from .scenario import ScenarioParams, generate_scenario

DEFAULT_WEIGHTS = (0.4, 0.1, 0.4, 0.1)
RESULT_COLUMNS = ("policy", "n_networks", "seed", "cq_mean", "cq_median", "cq_min",
                  "anccs", "cts", "ses", "ws")


def cq_stats(final_qvs, final_channels) -> tuple[float, float, float]:
    cq = np.array([qv[c] for qv, c in zip(final_qvs, final_channels)], dtype=float)
    return float(cq.mean()), float(np.median(cq)), float(cq.min())


def anccs(change_counts, t_points: int) -> float:
    counts = np.asarray(change_counts, dtype=float)
    if np.any(counts > t_points):
        raise ValueError("a network cannot change channel more than T times")
    return 1.0 - float(counts.mean()) / t_points


def cts(last_change_step: int, t_points: int, n_networks: int) -> float:
    horizon = t_points * n_networks
    if not 0 <= last_change_step <= horizon:
        raise ValueError(f"last change step {last_change_step} outside [0, {horizon}]")
    return 1.0 - last_change_step / horizon


def ses(final_qvs) -> float:
    qvs = np.asarray(final_qvs, dtype=float)
    psi = np.linalg.norm(qvs, axis=1) / math.sqrt(qvs.shape[1])
    return float(psi.mean())


def weighted_score(cq_mean: float, anccs_score: float, cts_score: float, ses_score: float,
                   weights=DEFAULT_WEIGHTS) -> float:
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    w1, w2, w3, w4 = weights
    return w1 * cq_mean + w2 * anccs_score + w3 * cts_score + w4 * ses_score


@dataclass
class EpisodeReport:
    final_qvs: np.ndarray
    final_channels: list[int]
    channel_change_counts: list[int]
    last_change_time: int
    t_points: int
    weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS
    cq_mean: float = field(init=False)
    cq_median: float = field(init=False)
    cq_min: float = field(init=False)
    anccs: float = field(init=False)
    cts: float = field(init=False)
    ses: float = field(init=False)
    ws: float = field(init=False)

    def __post_init__(self):
        n = len(self.final_channels)
        self.cq_mean, self.cq_median, self.cq_min = cq_stats(self.final_qvs, self.final_channels)
        self.anccs = anccs(self.channel_change_counts, self.t_points)
        self.cts = cts(self.last_change_time, self.t_points, n)
        self.ses = ses(self.final_qvs)
        self.ws = weighted_score(self.cq_mean, self.anccs, self.cts, self.ses, self.weights)

    @property
    def cq_mix(self) -> float:
        """(mean CQ + min CQ) / 2 for this episode."""
        return 0.5 * (self.cq_mean + self.cq_min)


def play_episode(policy, scenario, initial, order, t_points: int, rng, table: LinkTable | None = None,
                 sinr_target_db: float = DEFAULT_SINR_TARGET_DB) -> EpisodeReport:
    """Run a policy for T rounds in serial order and score the final assignment."""
    table = table or LinkTable(scenario)
    assignment = [int(c) for c in initial]
    counts = [0] * scenario.n_networks
    last_change = 0
    policy.reset(scenario, table, list(assignment), rng)
    step = 0
    for _ in range(t_points):
        for n in order:
            qv = table.quality_vector(assignment, n, sinr_target_db)
            a = int(policy.decide(n, qv, assignment[n], rng))
            if a != assignment[n]:
                counts[n] += 1
                last_change = step
                assignment[n] = a
            step += 1
    final_qvs = table.all_quality_vectors(assignment, sinr_target_db)
    return EpisodeReport(final_qvs, assignment, counts, last_change, t_points)


@dataclass(frozen=True)
class GridSpec:
    n_values: tuple[int, ...] = tuple(range(2, 16))
    games_per_n: int = 30
    base_seed: int = 0
    t_points: int = 20
    sinr_target_db: float = DEFAULT_SINR_TARGET_DB
    scenario_params: ScenarioParams = ScenarioParams()
    propagation: PropagationParams = PropagationParams()

    @property
    def n_games(self) -> int:
        return len(self.n_values) * self.games_per_n


def game_seed(base_seed: int, n_networks: int, game: int) -> int:
    return base_seed * 100_000 + n_networks * 1_000 + game


def setup_game(spec: GridSpec, n_networks: int, game: int):
    """Scenario, initial channels and serial order shared by every policy in a game."""
    seed = game_seed(spec.base_seed, n_networks, game)
    scenario = generate_scenario(n_networks, spec.scenario_params, seed)
    setup_rng = np.random.default_rng([seed, 1])
    k = spec.propagation.n_channels
    initial = [int(c) for c in setup_rng.integers(k, size=n_networks)]
    order = [int(n) for n in setup_rng.permutation(n_networks)]
    return seed, scenario, initial, order


def _run_game(args):
    policies, spec, n_networks, game = args
    seed, scenario, initial, order = setup_game(spec, n_networks, game)
    table = LinkTable(scenario, spec.propagation)
    rows = []
    for policy in policies:
        rng = np.random.default_rng([seed, 2])
        rep = play_episode(policy, scenario, initial, order, spec.t_points, rng, table, spec.sinr_target_db)
        rows.append({"policy": policy.name, "n_networks": n_networks, "seed": seed,
                     "cq_mean": rep.cq_mean, "cq_median": rep.cq_median, "cq_min": rep.cq_min,
                     "anccs": rep.anccs, "cts": rep.cts, "ses": rep.ses, "ws": rep.ws})
    return rows


def evaluate_grid(policies, spec: GridSpec = GridSpec(), workers: int = 1, progress=None) -> list[dict]:
    """One row per (policy, game); games are paired across policies by seed."""
    tasks = [(policies, spec, n, g) for n in spec.n_values for g in range(spec.games_per_n)]
    rows: list[dict] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, game_rows in enumerate(pool.map(_run_game, tasks)):
                rows.extend(game_rows)
                if progress:
                    progress(i + 1, len(tasks))
    else:
        for i, task in enumerate(tasks):
            rows.extend(_run_game(task))
            if progress:
                progress(i + 1, len(tasks))
    order = {p.name: i for i, p in enumerate(policies)}
    rows.sort(key=lambda r: (order[r["policy"]], r["n_networks"], r["seed"]))
    return rows


def summarize(rows) -> dict:
    """Per-policy means by N and overall, including E[(CQ + min CQ) / 2]."""
    keys = ("cq_mean", "cq_median", "cq_min", "anccs", "cts", "ses", "ws")
    out: dict = {}
    for policy in dict.fromkeys(r["policy"] for r in rows):
        prow = [r for r in rows if r["policy"] == policy]
        by_n = {}
        for n in sorted({r["n_networks"] for r in prow}):
            sub = [r for r in prow if r["n_networks"] == n]
            by_n[str(n)] = _means(sub, keys)
        out[policy] = {"games": len(prow), "overall": _means(prow, keys), "by_n": by_n}
    return out


def _means(rows, keys) -> dict:
    res = {k: float(np.mean([r[k] for r in rows])) for k in keys}
    res["cq_mix"] = float(np.mean([0.5 * (r["cq_mean"] + r["cq_min"]) for r in rows]))
    return res


def rows_to_csv(rows, columns=RESULT_COLUMNS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def summary_to_json(summary: dict) -> str:
    return json.dumps(summary, indent=2, sort_keys=True)
