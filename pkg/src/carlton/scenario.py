"""Random multi-network worlds: center points, Gaussian user clouds, managers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

SCENARIO_VERSION = "carlton-scenario/1"

Point = tuple[float, float]


class ScenarioFormatError(ValueError):
    """Malformed or unsupported scenario document."""


@dataclass(frozen=True)
class ScenarioParams:
    u1: float = 400.0
    x1: float = 50.0
    x2: float = 500.0
    user_spread_std: float = 50.0
    users_range: tuple[int, int] = (2, 15)

    def __post_init__(self):
        object.__setattr__(self, "users_range", tuple(int(v) for v in self.users_range))
        lo, hi = self.users_range
        if lo < 1 or hi < lo:
            raise ValueError(f"empty or invalid users_range {self.users_range}")
        if self.x1 > self.x2:
            raise ValueError("x1 must not exceed x2")


@dataclass(frozen=True)
class Network:
    users: tuple[Point, ...]
    manager_index: int

    @property
    def user_count(self) -> int:
        return len(self.users)


@dataclass(frozen=True)
class Scenario:
    networks: tuple[Network, ...]
    centers: tuple[Point, ...]
    params: ScenarioParams = field(default_factory=ScenarioParams)
    seed: int | None = None

    def __post_init__(self):
        if len(self.centers) != len(self.networks):
            raise ValueError("one center per network is required")
        if any(net.user_count < 1 for net in self.networks):
            raise ValueError("every network needs at least one user")

    @property
    def n_networks(self) -> int:
        return len(self.networks)


def elect_manager(users) -> int:
    """Index of the medoid user (lowest index on ties)."""
    pts = np.asarray(users, dtype=float).reshape(-1, 2)
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    # argmin returns the first minimum, which is the tie-break we want
    return int(np.argmin(dist.sum(axis=1)))


def generate_centers(n_networks: int, params: ScenarioParams, rng: np.random.Generator) -> list[Point]:
    if n_networks < 1:
        raise ValueError("n_networks must be >= 1")
    half = params.u1 * n_networks
    centers = [(float(rng.uniform(-half, half)), float(rng.uniform(-half, half)))]
    for _ in range(1, n_networks):
        cx, cy = centers[int(rng.integers(len(centers)))]
        r = rng.uniform(params.x1, params.x2)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        centers.append((float(cx + r * math.cos(theta)), float(cy + r * math.sin(theta))))
    return centers


def generate_scenario(n_networks: int, params: ScenarioParams | None = None,
                      rng: np.random.Generator | int | None = None) -> Scenario:
    params = params or ScenarioParams()
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    centers = generate_centers(n_networks, params, rng)
    lo, hi = params.users_range
    networks = []
    for c in centers:
        m = int(rng.integers(lo, hi + 1))
        # diagonal covariance: independent normals per axis
        pts = rng.normal(c, params.user_spread_std, size=(m, 2))
        users = tuple((float(x), float(y)) for x, y in pts)
        networks.append(Network(users, elect_manager(users)))
    return Scenario(tuple(networks), tuple(centers), params, None if seed is None else int(seed))


def scenario_to_dict(scenario: Scenario) -> dict:
    p = scenario.params
    return {
        "version": SCENARIO_VERSION,
        "seed": scenario.seed,
        "params": {"u1": p.u1, "x1": p.x1, "x2": p.x2,
                   "user_spread_std": p.user_spread_std,
                   "users_range": list(p.users_range)},
        "centers": [list(c) for c in scenario.centers],
        "networks": [{"users": [list(u) for u in net.users], "manager": net.manager_index}
                     for net in scenario.networks],
    }


def serialize_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=1)


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise ScenarioFormatError(f"{where}: missing field '{key}'")
    return doc[key]


def _point(value, where: str) -> Point:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ScenarioFormatError(f"{where}: expected [x, y], got {value!r}")
    try:
        return float(value[0]), float(value[1])
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"{where}: non-numeric coordinate {value!r}") from exc


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioFormatError("top level: expected an object")
    version = _require(doc, "version", "top level")
    if version != SCENARIO_VERSION:
        raise ScenarioFormatError(f"unsupported scenario version {version!r} (expected {SCENARIO_VERSION!r})")
    raw_params = _require(doc, "params", "top level")
    try:
        params = ScenarioParams(**raw_params)
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"params: {exc}") from exc
    centers = tuple(_point(c, f"centers[{i}]") for i, c in enumerate(_require(doc, "centers", "top level")))
    networks = []
    for n, raw in enumerate(_require(doc, "networks", "top level")):
        users = tuple(_point(u, f"networks[{n}].users[{j}]")
                      for j, u in enumerate(_require(raw, "users", f"networks[{n}]")))
        manager = _require(raw, "manager", f"networks[{n}]")
        if not (isinstance(manager, int) and 0 <= manager < len(users)):
            raise ScenarioFormatError(f"networks[{n}].manager: invalid index {manager!r}")
        networks.append(Network(users, manager))
    if len(centers) != len(networks):
        raise ScenarioFormatError(f"centers: {len(centers)} entries for {len(networks)} networks")
    seed = doc.get("seed")
    return Scenario(tuple(networks), centers, params, seed)


def load_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(doc)
