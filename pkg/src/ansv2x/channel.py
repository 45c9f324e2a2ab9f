"""Frozen per-epoch view of a scenario: links, handover draws and screens.

Every solver and every objective evaluation for one epoch reads from the same
:class:`Channel`, so all of them see identical shadowing and handover samples.
"""
from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .delay import DelayBreakdown, InfeasiblePair, handover_draw, power_time
from .feasibility import FeasibilityMask, build_mask
from .model import HandoverMode, HandoverModel, Scenario
from .radio import LinkState, link_state


@dataclass(frozen=True, eq=False)
class Channel:
    scenario: Scenario
    epoch: int
    links: tuple[tuple[LinkState, ...], ...]  # [i][k]
    switch_cost: np.ndarray  # (N+1, V) handover sample if vehicle k switches into i
    mask: FeasibilityMask
    delays: "DelayTable"
    alignment: np.ndarray  # (N+1, V) direction alignment D
    prep_runtime: float = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.scenario.n_networks, self.scenario.n_vehicles

    def link(self, i: int, j: int) -> LinkState:
        """Link of network ``i`` to vehicle id ``j``."""
        return self.links[i][j - 1]

    @property
    def rate(self) -> np.ndarray:
        """Shannon rate at each vehicle's bandwidth demand, coverage ignored."""
        return self.delays.rate

    @cached_property
    def handover(self) -> np.ndarray:
        cur = np.array([v.current_network for v in self.scenario.vehicles])
        rows = np.arange(self.shape[0])[:, None]
        out = np.where(rows == cur[None, :], 0.0, self.switch_cost)
        out.setflags(write=False)
        return out

    def base_delay(self, i: int, k: int) -> tuple[float, float]:
        """``(t_trans, t_comp)`` for network ``i`` and vehicle column ``k``."""
        d = self.delays
        if not d.usable[i, k]:
            raise InfeasiblePair(i, self.scenario.vehicles[k].id, d.why(i, k))
        return float(d.t_trans[i, k]), float(d.t_comp[i, k])

    def delay(self, i: int, k: int, handover: float | None = None) -> DelayBreakdown:
        """Breakdown for network ``i`` and vehicle column ``k``; raises if screened out."""
        if not self.mask.allowed[i, k]:
            why = ",".join(r.value for r in self.mask.reasons[i][k])
            raise InfeasiblePair(i, self.scenario.vehicles[k].id, f"screened out ({why})")
        t_trans, t_comp = self.base_delay(i, k)
        t_ho = self.handover[i, k] if handover is None else handover
        return DelayBreakdown.of(t_trans, t_comp, float(t_ho))

    def expected_handover(self) -> np.ndarray:
        """Handover matrix with every switch costing the model mean."""
        cur = np.array([v.current_network for v in self.scenario.vehicles])
        rows = np.arange(self.shape[0])[:, None]
        return np.where(rows == cur[None, :], 0.0, max(0.0, self.scenario.handover.mean_s))

    def digest(self) -> str:
        """Hash of every frozen draw a solver may consume."""
        h = hashlib.sha256()
        for row in self.links:
            for link in row:
                h.update(np.array([link.received_power, link.sinr, link.angle, link.alignment]).tobytes())
        h.update(np.ascontiguousarray(self.switch_cost).tobytes())
        h.update(np.ascontiguousarray(self.mask.allowed).tobytes())
        h.update(np.ascontiguousarray(self.delays.base()).tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class DelayTable:
    """Handover-free delay terms for every pair, evaluated once per epoch."""

    rate: np.ndarray
    t_trans: np.ndarray
    t_comp: np.ndarray
    usable: np.ndarray

    def base(self) -> np.ndarray:
        """``t_trans + t_comp``, ``inf`` where unusable."""
        return np.where(self.usable, self.t_trans + self.t_comp, np.inf)

    def why(self, i: int, k: int) -> str:
        return "link unusable (zero rate)" if not self.rate[i, k] > 0 else "no compute grant"


def delay_table(s: Scenario, sinr: np.ndarray) -> DelayTable:
    nets, vehs = s.networks, s.vehicles
    bw = np.array([v.bandwidth_demand for v in vehs])[None, :]
    size = np.array([v.data_size for v in vehs])[None, :]
    work = np.array([v.compute_demand for v in vehs])[None, :]
    grant = np.array([v.compute_grant_demand for v in vehs])[None, :]
    delta = np.array([n.base_latency for n in nets])[:, None]
    power = np.array(
        [
            power_time(n.idle_power, n.idle_window_s, n.compute_power, n.compute_service_time, n.stable_tx_power)
            for n in nets
        ]
    )[:, None]
    snr = 10.0 ** (sinr / 10.0)
    rate = np.where(bw > 0, s.radio.shannon_efficiency * bw * np.log2(1.0 + snr), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_trans = size / rate + delta + power
        t_comp = np.where(work == 0, 0.0, work / grant)
    usable = (rate > 0) & ((work == 0) | (grant > 0))
    t_comp = np.broadcast_to(t_comp, rate.shape).copy()
    for arr in (rate, t_trans, t_comp, usable):
        arr.setflags(write=False)
    return DelayTable(rate, t_trans, t_comp, usable)


def freeze(s: Scenario, epoch: int | None = None, *, handover: HandoverModel | None = None) -> Channel:
    t0 = time.perf_counter()
    epoch = s.epoch if epoch is None else epoch
    model = s.handover if handover is None else handover
    links = tuple(
        tuple(link_state(n, v, s.radio, seed=s.rng_seed, epoch=epoch) for v in s.vehicles) for n in s.networks
    )
    switch = np.array(
        [
            [handover_draw(model, seed=s.rng_seed, vehicle=v.id, candidate=n.id, epoch=epoch) for v in s.vehicles]
            for n in s.networks
        ],
        dtype=float,
    ).reshape(len(s.networks), len(s.vehicles))
    switch.setflags(write=False)
    sinr = np.array([[link.sinr for link in row] for row in links], dtype=float).reshape(switch.shape)
    mask = build_mask(links, s.radio)
    table = delay_table(s, sinr)
    align = np.array([[link.alignment for link in row] for row in links], dtype=float).reshape(switch.shape)
    align.setflags(write=False)
    return Channel(s, epoch, links, switch, mask, table, align, time.perf_counter() - t0)


def expected_mode(model: HandoverModel) -> HandoverModel:
    return HandoverModel(model.mean_s, model.std_s, HandoverMode.ExpectedValue)
