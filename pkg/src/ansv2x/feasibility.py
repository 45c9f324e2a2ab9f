"""Per-pair screens and assignment-level constraint checks."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .model import AssignmentMatrix, RadioParams, Scenario
from .radio import LinkState

if TYPE_CHECKING:
    from .channel import Channel

FALLBACK = 0


class Reason(str, enum.Enum):
    Power = "Power"
    SINR = "SINR"
    Direction = "Direction"


@dataclass(frozen=True, eq=False)
class FeasibilityMask:
    allowed: np.ndarray  # (N+1, V) bool
    reasons: tuple[tuple[tuple[Reason, ...], ...], ...]  # [i][k] failed screens

    def degraded_fallbacks(self) -> list[int]:
        """Vehicle columns whose fallback link fails at least one screen."""
        return [k for k, r in enumerate(self.reasons[FALLBACK]) if r]


@dataclass(frozen=True)
class Overshoot:
    network: int
    resource: str  # "bandwidth" | "compute"
    used: float
    max: float


def pair_feasible(link: LinkState, r: RadioParams) -> tuple[bool, list[Reason]]:
    reasons = []
    if not link.received_power >= r.power_threshold_dbm:
        reasons.append(Reason.Power)
    if not link.sinr >= r.sinr_threshold_db:
        reasons.append(Reason.SINR)
    if link.heading_defined and not link.angle <= r.angle_threshold:
        reasons.append(Reason.Direction)
    return not reasons, reasons


def build_mask(links, radio: RadioParams) -> FeasibilityMask:
    """Screen every link; the fallback row stays allowed whatever its screens say."""
    n = len(links)
    v = len(links[0]) if n else 0
    allowed = np.zeros((n, v), dtype=bool)
    reasons = []
    for i, row in enumerate(links):
        rrow = []
        for k, link in enumerate(row):
            ok, why = pair_feasible(link, radio)
            allowed[i, k] = ok or i == FALLBACK
            rrow.append(tuple(why))
        reasons.append(tuple(rrow))
    allowed.setflags(write=False)
    return FeasibilityMask(allowed, tuple(reasons))


def capacity_ok(s: Scenario, a: AssignmentMatrix) -> tuple[bool, list[Overshoot]]:
    """Bandwidth and compute budgets on every candidate network.

    The ad hoc fallback (index 0) pools per-vehicle resources and is exempt.
    """
    report = []
    bw = (a.bandwidth_grant * a.alpha).sum(axis=1)
    cpu = (a.compute_grant * a.alpha).sum(axis=1)
    for n in s.networks[1:]:
        if bw[n.id] > n.bandwidth_total:
            report.append(Overshoot(n.id, "bandwidth", float(bw[n.id]), n.bandwidth_total))
        if cpu[n.id] > n.compute_total:
            report.append(Overshoot(n.id, "compute", float(cpu[n.id]), n.compute_total))
    return not report, report


def assignment_valid(
    s: Scenario, a: AssignmentMatrix, epoch: int | None = None, *, channel: "Channel | None" = None
) -> tuple[bool, list[str]]:
    if channel is None:
        from .channel import freeze

        channel = freeze(s, epoch)
    violations = []
    if a.alpha.shape != (s.n_networks, s.n_vehicles):
        return False, [f"assignment shape {a.alpha.shape} does not match scenario"]
    cols = a.alpha.sum(axis=0)
    for k in np.flatnonzero(cols > 1):
        violations.append(f"vehicle {s.vehicles[k].id}: assigned to {int(cols[k])} networks")
    off = ~a.alpha
    if np.any(a.bandwidth_grant[off] != 0) or np.any(a.compute_grant[off] != 0):
        violations.append("grants present on unassigned pairs")
    for i, k in zip(*np.nonzero(a.alpha & ~channel.mask.allowed)):
        why = ",".join(r.value for r in channel.mask.reasons[i][k])
        violations.append(f"vehicle {s.vehicles[k].id}: network {i} screened out ({why})")
    ok, over = capacity_ok(s, a)
    for o in over:
        violations.append(f"network {o.network}: {o.resource} used {o.used:.6g} > max {o.max:.6g}")
    return not violations, violations
