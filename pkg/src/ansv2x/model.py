"""Domain types, default parameter tables, validation and scenario files."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Vec2 = tuple[float, float]


class RatClass(str, enum.Enum):
    LTE4G = "LTE4G"
    NR5G = "NR5G"
    DSRC = "DSRC"
    AdHocCurrent = "AdHocCurrent"


class AppClass(str, enum.Enum):
    Safety = "Safety"
    Infotainment = "Infotainment"

    @property
    def latency_budget(self) -> float:
        return LATENCY_BUDGET_S[self]


LATENCY_BUDGET_S = {AppClass.Safety: 0.050, AppClass.Infotainment: 0.100}


class HandoverMode(str, enum.Enum):
    SampledPerDecision = "sampled"
    ExpectedValue = "expected"


@dataclass(frozen=True)
class NetworkNode:
    id: int
    rat: RatClass
    position: Vec2
    bandwidth_total: float  # Hz
    compute_total: float  # cycles/s
    base_latency: float  # s
    idle_power: float = 10.0  # W
    compute_power: float = 30.0  # W
    stable_tx_power: float = 30.0  # W
    compute_service_time: float = 0.001  # s
    tx_power_dbm: float = 30.0
    # idle window multiplying idle_power in the power-induced term
    idle_window_s: float = 0.01


@dataclass(frozen=True)
class VehicleAgent:
    id: int
    position: Vec2
    velocity: Vec2
    destination: Vec2
    app: AppClass
    data_size: float  # bits
    compute_demand: float  # cycles
    bandwidth_demand: float  # Hz
    compute_grant_demand: float  # cycles/s
    current_network: int = 0

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


@dataclass(frozen=True)
class RadioParams:
    pathloss_exponent: float = 3.0
    reference_distance: float = 1.0
    reference_loss_db: float = 40.0
    shadowing_sigma_db: float = 4.0
    noise_floor_dbm: float = -95.0
    sinr_threshold_db: float = 15.0
    power_threshold_dbm: float = -90.0
    angle_threshold: float = 180.0
    shannon_efficiency: float = 1.0


@dataclass(frozen=True)
class HandoverModel:
    mean_s: float = 0.020
    std_s: float = 0.005
    mode: HandoverMode = HandoverMode.SampledPerDecision


@dataclass(frozen=True)
class Scenario:
    networks: tuple[NetworkNode, ...]
    vehicles: tuple[VehicleAgent, ...]
    radio: RadioParams = RadioParams()
    handover: HandoverModel = HandoverModel()
    lam: float = 0.1
    rng_seed: int = 0
    epoch: int = 0

    def __post_init__(self):
        object.__setattr__(self, "networks", tuple(self.networks))
        object.__setattr__(self, "vehicles", tuple(self.vehicles))

    @property
    def n_networks(self) -> int:
        """Number of rows in the assignment matrix (candidates plus index 0)."""
        return len(self.networks)

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicles)

    def with_handover(self, **changes) -> "Scenario":
        return replace(self, handover=replace(self.handover, **changes))


# Per-class resource demands (bandwidth Hz, compute grant cycles/s) and workload.
APP_DEFAULTS = {
    AppClass.Safety: dict(
        data_size=1.0e5, compute_demand=2.0e6, bandwidth_demand=1.0e6, compute_grant_demand=0.2e9
    ),
    AppClass.Infotainment: dict(
        data_size=2.0e6, compute_demand=2.0e7, bandwidth_demand=5.0e6, compute_grant_demand=0.5e9
    ),
}

# Per-RAT capacity and radio defaults.
RAT_DEFAULTS = {
    RatClass.LTE4G: dict(bandwidth_total=20e6, compute_total=1.0e9, base_latency=0.020, tx_power_dbm=43.0),
    RatClass.NR5G: dict(bandwidth_total=100e6, compute_total=2.0e9, base_latency=0.005, tx_power_dbm=40.0),
    RatClass.DSRC: dict(bandwidth_total=10e6, compute_total=0.5e9, base_latency=0.002, tx_power_dbm=23.0),
    RatClass.AdHocCurrent: dict(bandwidth_total=10e6, compute_total=0.5e9, base_latency=0.030, tx_power_dbm=20.0),
}


class AssignmentError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class AssignmentMatrix:
    """Binary vehicle-to-network decision with per-pair resource grants.

    Rows are network ids ``0..N``; column ``k`` belongs to ``scenario.vehicles[k]``.
    """

    alpha: np.ndarray
    bandwidth_grant: np.ndarray
    compute_grant: np.ndarray

    def __post_init__(self):
        for arr in (self.alpha, self.bandwidth_grant, self.compute_grant):
            arr.setflags(write=False)

    @classmethod
    def from_choices(cls, scenario: Scenario, choices: Sequence[int | None]) -> "AssignmentMatrix":
        n, v = scenario.n_networks, scenario.n_vehicles
        if len(choices) != v:
            raise AssignmentError(f"expected {v} choices, got {len(choices)}")
        alpha = np.zeros((n, v), dtype=bool)
        b = np.zeros((n, v))
        f = np.zeros((n, v))
        for k, (veh, i) in enumerate(zip(scenario.vehicles, choices)):
            if i is None:
                continue
            if not 0 <= i < n:
                raise AssignmentError(f"vehicle {veh.id}: network {i} out of range")
            alpha[i, k] = True
            b[i, k] = veh.bandwidth_demand
            f[i, k] = veh.compute_grant_demand
        return cls(alpha, b, f)

    @classmethod
    def empty(cls, scenario: Scenario) -> "AssignmentMatrix":
        return cls.from_choices(scenario, [None] * scenario.n_vehicles)

    def choices(self) -> list[int | None]:
        out: list[int | None] = []
        for col in self.alpha.T:
            rows = np.flatnonzero(col)
            out.append(int(rows[0]) if len(rows) == 1 else None)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, AssignmentMatrix):
            return NotImplemented
        return (
            np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.bandwidth_grant, other.bandwidth_grant)
            and np.array_equal(self.compute_grant, other.compute_grant)
        )


@dataclass
class SolveReport:
    solver: str
    assignment: AssignmentMatrix
    per_vehicle_delay: np.ndarray
    total_delay: float
    total_utility: float
    mean_latency: float
    solver_runtime: float
    nodes_explored: int = 0
    episodes: int = 0
    feasible: bool = True
    optimal: bool = False
    unassigned_vehicles: list[int] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


def validate_scenario(s: Scenario) -> list[str]:
    """Return one message per broken invariant; an empty list means valid."""
    out: list[str] = []
    if not s.networks:
        out.append("scenario: at least one network (index 0) is required")
    for idx, n in enumerate(s.networks):
        tag = f"network {idx}"
        if n.id != idx:
            out.append(f"{tag}: id must equal its index (got {n.id})")
        if idx == 0 and n.rat != RatClass.AdHocCurrent:
            out.append(f"{tag}: rat must be AdHocCurrent for index 0")
        if idx > 0 and n.rat == RatClass.AdHocCurrent:
            out.append(f"{tag}: rat AdHocCurrent is reserved for index 0")
        if not n.bandwidth_total > 0:
            out.append(f"{tag}: bandwidth_total must be > 0")
        if not n.compute_total > 0:
            out.append(f"{tag}: compute_total must be > 0")
        if not n.base_latency >= 0:
            out.append(f"{tag}: base_latency must be >= 0")
        if not n.stable_tx_power > 0:
            out.append(f"{tag}: stable_tx_power must be > 0")
        for name in ("idle_power", "compute_power", "compute_service_time", "idle_window_s"):
            if not getattr(n, name) >= 0:
                out.append(f"{tag}: {name} must be >= 0")
        if not _finite(n.position):
            out.append(f"{tag}: position must be finite")
        if not math.isfinite(n.tx_power_dbm):
            out.append(f"{tag}: tx_power_dbm must be finite")

    ids = [v.id for v in s.vehicles]
    if ids != list(range(1, len(ids) + 1)):
        out.append("vehicles: ids must be 1..V in order")
    for v in s.vehicles:
        tag = f"vehicle {v.id}"
        if not v.data_size > 0:
            out.append(f"{tag}: data_size must be > 0")
        if not v.compute_demand >= 0:
            out.append(f"{tag}: compute_demand must be >= 0")
        if not v.bandwidth_demand > 0:
            out.append(f"{tag}: bandwidth_demand must be > 0")
        if v.compute_demand > 0 and not v.compute_grant_demand > 0:
            out.append(f"{tag}: compute_grant_demand must be > 0 when compute_demand > 0")
        for name in ("position", "velocity", "destination"):
            if not _finite(getattr(v, name)):
                out.append(f"{tag}: {name} must be finite")
        if v.speed > 0 and tuple(v.destination) == tuple(v.position):
            out.append(f"{tag}: destination must differ from position for a moving vehicle")
        if not 0 <= v.current_network < max(len(s.networks), 1):
            out.append(f"{tag}: current_network {v.current_network} is not a network id")

    r = s.radio
    if not 1.6 <= r.pathloss_exponent <= 6.0:
        out.append("radio: pathloss_exponent must be in [1.6, 6.0]")
    if not r.reference_distance > 0:
        out.append("radio: reference_distance must be > 0")
    if not r.shadowing_sigma_db >= 0:
        out.append("radio: shadowing_sigma_db must be >= 0")
    if not 0 < r.shannon_efficiency <= 1:
        out.append("radio: shannon_efficiency must be in (0, 1]")
    if not 0 <= r.angle_threshold <= 180:
        out.append("radio: angle_threshold must be in [0, 180]")
    h = s.handover
    if not (h.mean_s >= 0 and h.std_s >= 0):
        out.append("handover: mean_s and std_s must be >= 0")
    if not math.isfinite(s.lam):
        out.append("scenario: lambda must be finite")
    return out


def _finite(vec: Iterable[float]) -> bool:
    vals = list(vec)
    return len(vals) == 2 and all(math.isfinite(x) for x in vals)


# -- scenario files ---------------------------------------------------------
# JSON document: {"radio": {...}, "handover": {...}, "networks": [...],
# "vehicles": [...], "lambda": float, "rng_seed": int, "epoch": int}


def scenario_to_dict(s: Scenario) -> dict:
    def plain(obj):
        d = {}
        for f in fields(obj):
            val = getattr(obj, f.name)
            if isinstance(val, enum.Enum):
                val = val.value
            elif isinstance(val, tuple):
                val = list(val)
            d[f.name] = val
        return d

    return {
        "radio": plain(s.radio),
        "handover": plain(s.handover),
        "networks": [plain(n) for n in s.networks],
        "vehicles": [plain(v) for v in s.vehicles],
        "lambda": s.lam,
        "rng_seed": s.rng_seed,
        "epoch": s.epoch,
    }


def scenario_from_dict(d: dict) -> Scenario:
    try:
        networks = [
            NetworkNode(**{**n, "rat": RatClass(n["rat"]), "position": tuple(n["position"])})
            for n in d["networks"]
        ]
        vehicles = [
            VehicleAgent(
                **{
                    **v,
                    "app": AppClass(v["app"]),
                    "position": tuple(v["position"]),
                    "velocity": tuple(v["velocity"]),
                    "destination": tuple(v["destination"]),
                }
            )
            for v in d["vehicles"]
        ]
        handover = d.get("handover", {})
        handover = HandoverModel(**{**handover, "mode": HandoverMode(handover.get("mode", "sampled"))})
        return Scenario(
            networks=networks,
            vehicles=vehicles,
            radio=RadioParams(**d.get("radio", {})),
            handover=handover,
            lam=float(d.get("lambda", 0.1)),
            rng_seed=int(d.get("rng_seed", 0)),
            epoch=int(d.get("epoch", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed scenario document: {exc}") from exc


def save_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n", encoding="utf-8")


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
