"""Application-aware network selection with safety-first post-selection eviction."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..channel import Channel
from ..delay import DelayBreakdown
from ..feasibility import FALLBACK
from ..model import AppClass, AssignmentMatrix, Scenario, SolveReport, VehicleAgent
from ..radio import LinkState
from ._report import make_report
from .bnb import _resolve

# Converts the direction penalty into rate units for infotainment scoring.
RATE_SCALE = 1e6  # bit/s


def score_pair(
    v: VehicleAgent, link: LinkState, delay: DelayBreakdown, lam: float, *, rate: float | None = None
) -> float:
    """Safety: ``T - lam*D`` (lower wins). Infotainment: ``r - lam*RATE_SCALE*(1 - D)`` (higher wins)."""
    if v.app == AppClass.Safety:
        return delay.t_total - lam * link.alignment
    r = link.rate if rate is None else rate
    return r - lam * RATE_SCALE * (1.0 - link.alignment)


@dataclass
class ScoreTable:
    score: np.ndarray  # (N+1, V), nan where not a candidate
    ranking: list[list[int]]  # per column, candidate networks best first

    def rank_key(self, s: Scenario, i: int, k: int) -> float:
        """Smaller is better regardless of class."""
        sc = self.score[i, k]
        return sc if s.vehicles[k].app == AppClass.Safety else -sc


def score_table(ch: Channel) -> ScoreTable:
    """Score every candidate pair at once; same arithmetic as :func:`score_pair`."""
    s = ch.scenario
    n, v = ch.shape
    safety = np.array([x.app == AppClass.Safety for x in s.vehicles])[None, :]
    t_total = ch.delays.base() + ch.handover
    d = ch.alignment
    score = np.where(safety, t_total - s.lam * d, ch.rate - s.lam * RATE_SCALE * (1.0 - d))
    cand = ch.mask.allowed & ch.delays.usable
    score = np.where(cand, score, np.nan)
    # stable sort on rows keeps ties on the lower network id
    key = np.where(cand, np.where(safety, score, -score), np.inf)
    order = np.argsort(key, axis=0, kind="stable").T.tolist()
    ok = cand.T.tolist()
    ranking = [[i for i in col if flags[i]] for col, flags in zip(order, ok)]
    return ScoreTable(score, ranking)


def select_networks(
    s: Scenario, epoch: int | None = None, *, channel: Channel | None = None, table: ScoreTable | None = None
) -> AssignmentMatrix:
    ch = _resolve(s, epoch, channel)
    table = score_table(ch) if table is None else table
    choices = [r[0] if r else ch.scenario.vehicles[k].current_network for k, r in enumerate(table.ranking)]
    return AssignmentMatrix.from_choices(ch.scenario, choices)


def allocate_and_evict(
    s: Scenario,
    a: AssignmentMatrix,
    epoch: int | None = None,
    *,
    channel: Channel | None = None,
    table: ScoreTable | None = None,
    log: list | None = None,
) -> AssignmentMatrix:
    """Evict lowest-priority vehicles from overloaded networks and re-offer them elsewhere."""
    ch = _resolve(s, epoch, channel)
    s = ch.scenario
    table = score_table(ch) if table is None else table
    choice = a.choices()
    n = s.n_networks
    bw = [v.bandwidth_demand for v in s.vehicles]
    cpu = [v.compute_grant_demand for v in s.vehicles]
    cap_bw = [math.inf] + [x.bandwidth_total for x in s.networks[1:]]
    cap_cpu = [math.inf] + [x.compute_total for x in s.networks[1:]]
    used_bw = [0.0] * n
    used_cpu = [0.0] * n
    for k, i in enumerate(choice):
        if i is not None:
            used_bw[i] += bw[k]
            used_cpu[i] += cpu[k]
    if not any(used_bw[i] > cap_bw[i] or used_cpu[i] > cap_cpu[i] for i in range(1, n)):
        return a

    def over(i):
        return used_bw[i] > cap_bw[i] or used_cpu[i] > cap_cpu[i]

    def fits(i, k):
        return used_bw[i] + bw[k] <= cap_bw[i] and used_cpu[i] + cpu[k] <= cap_cpu[i]

    rejected: dict[int, set[int]] = {}
    for i in range(1, n):
        if not over(i):
            continue
        roster = [k for k, c in enumerate(choice) if c == i]
        roster.sort(key=lambda k: (s.vehicles[k].app != AppClass.Safety, table.rank_key(s, i, k), k))
        while over(i):
            k = roster.pop()
            choice[k] = None
            used_bw[i] -= bw[k]
            used_cpu[i] -= cpu[k]
            rejected.setdefault(k, set()).add(i)
            target = next(
                (c for c in table.ranking[k] if c not in rejected[k] and fits(c, k)),
                FALLBACK,
            )
            choice[k] = target
            used_bw[target] += bw[k]
            used_cpu[target] += cpu[k]
            if log is not None:
                log.append((s.vehicles[k].id, i, target))
    return AssignmentMatrix.from_choices(s, choice)


def solve_ans(s: Scenario, epoch: int | None = None, *, channel: Channel | None = None) -> SolveReport:
    ch = _resolve(s, epoch, channel)
    t0 = time.perf_counter()
    table = score_table(ch)
    a0 = select_networks(ch.scenario, channel=ch, table=table)
    evictions: list = []
    a = allocate_and_evict(ch.scenario, a0, channel=ch, table=table, log=evictions)
    runtime = time.perf_counter() - t0
    return make_report("ans", ch, a, runtime, diagnostics={"evictions": evictions})
