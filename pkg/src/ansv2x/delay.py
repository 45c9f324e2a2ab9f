"""Dissemination-time model: transmission, computation and handover delay."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .model import AssignmentMatrix, HandoverMode, HandoverModel, Scenario

if TYPE_CHECKING:
    from .channel import Channel

HANDOVER_STREAM = 2


class LinkUnusable(ValueError):
    """The pair has no positive data rate or is screened out."""


class NoComputeGrant(ValueError):
    pass


class InfeasiblePair(ValueError):
    def __init__(self, i: int, j: int, why: str):
        super().__init__(f"pair (network {i}, vehicle {j}) is infeasible: {why}")
        self.i, self.j = i, j


@dataclass(frozen=True)
class DelayBreakdown:
    t_trans: float
    t_comp: float
    t_handover: float
    t_total: float

    @classmethod
    def of(cls, t_trans: float, t_comp: float, t_handover: float) -> "DelayBreakdown":
        return cls(t_trans, t_comp, t_handover, t_trans + t_comp + t_handover)


def power_time(p_idle: float, sigma: float, p_c: float, t_c: float, p_s: float) -> float:
    return (p_idle * sigma + p_c * t_c) / p_s


def transmission_time(
    s_j: float, r_ij: float, delta_i: float, p_idle: float, sigma: float, p_c: float, t_c: float, p_s: float
) -> float:
    if not r_ij > 0:
        raise LinkUnusable("data rate is zero")
    return s_j / r_ij + delta_i + power_time(p_idle, sigma, p_c, t_c, p_s)


def computation_time(c_j: float, f_ij: float) -> float:
    if c_j == 0:
        return 0.0
    if not f_ij > 0:
        raise NoComputeGrant("positive workload with no compute grant")
    return c_j / f_ij


def handover_draw(model: HandoverModel, *, seed: int, vehicle: int, candidate: int, epoch: int) -> float:
    """Switching cost into ``candidate``, frozen per (seed, vehicle, candidate, epoch)."""
    if model.mode == HandoverMode.ExpectedValue or model.std_s == 0:
        return max(0.0, model.mean_s)
    rng = np.random.default_rng(
        [int(seed) & 0xFFFFFFFFFFFFFFFF, HANDOVER_STREAM, vehicle, candidate, epoch]
    )
    return max(0.0, float(rng.normal(model.mean_s, model.std_s)))


def handover_delay(
    current: int, candidate: int, model: HandoverModel, *, seed: int = 0, vehicle: int = 0, epoch: int = 0
) -> float:
    if current == candidate:
        return 0.0
    return handover_draw(model, seed=seed, vehicle=vehicle, candidate=candidate, epoch=epoch)


def _channel(s: Scenario, epoch: int | None, channel: "Channel | None") -> "Channel":
    if channel is not None:
        return channel
    from .channel import freeze

    return freeze(s, epoch)


def pair_delay(
    s: Scenario, i: int, j: int, epoch: int | None = None, *, channel: "Channel | None" = None
) -> DelayBreakdown:
    """Delay of vehicle id ``j`` served by network ``i`` using frozen draws."""
    ch = _channel(s, epoch, channel)
    return ch.delay(i, j - 1)


def total_objective(
    s: Scenario, a: AssignmentMatrix, epoch: int | None = None, *, channel: "Channel | None" = None
) -> float:
    ch = _channel(s, epoch, channel)
    if np.any(a.alpha.sum(axis=0) > 1):
        raise ValueError("a vehicle is assigned to more than one network")
    terms = []
    for i, k in zip(*np.nonzero(a.alpha)):
        terms.append(ch.delay(int(i), int(k)).t_total)
    return math.fsum(terms)
