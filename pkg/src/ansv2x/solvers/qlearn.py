"""Tabular Q-learning baseline: one epsilon-greedy agent per vehicle.

Within an episode each agent takes ``horizon`` decisions on the frozen channel.
The state is ``(app, current network, SINR bin of the best candidate)`` and the
action is the network to use next. Agents that pick a screened-out network, or
lose the admission draw on an over-subscribed network, receive the floor
reward and stay where they were.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..channel import Channel
from ..delay import DelayBreakdown
from ..feasibility import FALLBACK
from ..metrics import convergence_episode
from ..model import AppClass, AssignmentMatrix, Scenario, SolveReport
from ._report import make_report
from .ans import allocate_and_evict, score_table
from .bnb import _resolve

SINR_EDGES_DB = (5.0, 15.0, 25.0, 35.0)
FLOOR_REWARD = -1.0

State = tuple[AppClass, int, int]


def sinr_bin(sinr_db: float) -> int:
    return int(np.searchsorted(SINR_EDGES_DB, sinr_db, side="right"))


def reward(delay: DelayBreakdown | None, feasible: bool, budget: float) -> float:
    if not feasible or delay is None:
        return FLOOR_REWARD
    return 1.0 - min(delay.t_total / budget, 2.0)


@dataclass(frozen=True)
class LearnConfig:
    episodes: int = 500
    learning_rate: float = 0.1
    discount: float = 0.9
    epsilon_start: float = 0.9
    epsilon_end: float = 0.05
    horizon: int = 4
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must be in (0, 1]")
        if not 0 <= self.discount < 1:
            raise ValueError("discount must be in [0, 1)")
        if not 0 <= self.epsilon_end <= self.epsilon_start <= 1:
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")
        if self.episodes < 0 or self.horizon < 1:
            raise ValueError("episodes must be >= 0 and horizon >= 1")

    def epsilon(self, episode: int) -> float:
        """Exponential decay from ``epsilon_start`` to ``epsilon_end`` over the run."""
        if self.episodes <= 1 or self.epsilon_end == self.epsilon_start:
            return self.epsilon_start
        if self.epsilon_end == 0:
            return self.epsilon_start * (1 - episode / (self.episodes - 1))
        frac = episode / (self.episodes - 1)
        return self.epsilon_start * (self.epsilon_end / self.epsilon_start) ** frac


@dataclass
class QTable:
    n_actions: int
    q: dict[State, np.ndarray] = field(default_factory=dict)

    def values(self, state: State) -> np.ndarray:
        return self.q.get(state, np.zeros(self.n_actions))

    def greedy(self, state: State) -> int:
        """Highest-valued action; ties go to the lowest network id."""
        return int(np.argmax(self.values(state)))

    def to_dict(self) -> dict:
        return {
            "n_actions": self.n_actions,
            "entries": [
                {"state": [s[0].value, s[1], s[2]], "values": [float(x) for x in vals]}
                for s, vals in sorted(self.q.items(), key=lambda kv: (kv[0][0].value, kv[0][1], kv[0][2]))
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QTable":
        t = cls(int(d["n_actions"]))
        for e in d["entries"]:
            app, cur, b = e["state"]
            t.q[(AppClass(app), int(cur), int(b))] = np.array(e["values"], dtype=float)
        return t


def save_tables(tables: list[QTable], path: str | Path) -> None:
    Path(path).write_text(json.dumps([t.to_dict() for t in tables], indent=1) + "\n", encoding="utf-8")


def load_tables(path: str | Path) -> list[QTable]:
    return [QTable.from_dict(d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]


@dataclass
class TrainResult:
    tables: list[QTable]
    rewards: np.ndarray  # per-episode mean reward under the behaviour policy
    greedy_rewards: np.ndarray  # per-episode mean reward of the greedy policy after the update
    runtime: float


class _Env:
    """Reward tables for one frozen channel."""

    def __init__(self, ch: Channel):
        s = ch.scenario
        n, v = ch.shape
        self.n, self.v = n, v
        self.allowed = np.array(ch.mask.allowed)
        budget = np.array([x.app.latency_budget for x in s.vehicles])
        self.allowed &= ch.delays.usable
        base = ch.delays.base()
        self.r_stay = np.where(self.allowed, 1.0 - np.minimum(base / budget, 2.0), FLOOR_REWARD)
        self.r_switch = np.where(
            self.allowed, 1.0 - np.minimum((base + ch.switch_cost) / budget, 2.0), FLOOR_REWARD
        )
        self.bw = np.array([x.bandwidth_demand for x in s.vehicles])
        self.cpu = np.array([x.compute_grant_demand for x in s.vehicles])
        self.cap_bw = np.array([x.bandwidth_total for x in s.networks])
        self.cap_cpu = np.array([x.compute_total for x in s.networks])
        self.start = np.array([x.current_network for x in s.vehicles])
        best = [max(ch.links[i][k].sinr for i in range(n)) for k in range(v)]
        self.bins = [sinr_bin(b) for b in best]
        self.apps = [x.app for x in s.vehicles]
        self.cols = np.arange(v)

    def act(self, current: np.ndarray, action: np.ndarray, order) -> tuple[np.ndarray, np.ndarray]:
        """Rewards and accept flags for a joint action; ``order`` ranks admission."""
        cols = self.cols
        r = np.where(action == current, self.r_stay[action, cols], self.r_switch[action, cols])
        ok = self.allowed[action, cols].copy()
        for i in range(1, self.n):
            on = np.flatnonzero(ok & (action == i))
            if len(on) == 0:
                continue
            if self.bw[on].sum() <= self.cap_bw[i] and self.cpu[on].sum() <= self.cap_cpu[i]:
                continue
            used_bw = used_cpu = 0.0
            for k in sorted(on, key=lambda k: order[k]):
                if used_bw + self.bw[k] <= self.cap_bw[i] and used_cpu + self.cpu[k] <= self.cap_cpu[i]:
                    used_bw += self.bw[k]
                    used_cpu += self.cpu[k]
                else:
                    ok[k] = False
        r = np.where(ok, r, FLOOR_REWARD)
        return r, ok


def train(
    s: Scenario,
    cfg: LearnConfig = LearnConfig(),
    epoch: int | None = None,
    *,
    channel: Channel | None = None,
    init: list[QTable] | None = None,
) -> TrainResult:
    """Train one table per vehicle; ``init`` warm-starts from earlier tables."""
    ch = _resolve(s, epoch, channel)
    t0 = time.perf_counter()
    env = _Env(ch)
    n, v = env.n, env.v
    rng = np.random.default_rng(cfg.rng_seed)
    q = np.zeros((v, n, n))  # [vehicle, current network, action]
    if init is not None:
        if len(init) != v or any(t.n_actions != n for t in init):
            raise ValueError("warm-start tables do not match the scenario shape")
        for k, t in enumerate(init):
            for c in range(n):
                q[k, c] = t.values((env.apps[k], c, env.bins[k]))
    cols = env.cols
    id_order = np.arange(v)
    rewards = np.zeros(cfg.episodes)
    greedy_rewards = np.zeros(cfg.episodes)
    for ep in range(cfg.episodes):
        eps = cfg.epsilon(ep)
        cur = env.start.copy()
        total = 0.0
        for step in range(cfg.horizon):
            greedy = np.argmax(q[cols, cur], axis=1)
            explore = rng.random(v) < eps
            random_action = rng.integers(0, n, size=v)
            action = np.where(explore, random_action, greedy)
            r, ok = env.act(cur, action, rng.permutation(v))
            nxt = np.where(ok, action, cur)
            if step == cfg.horizon - 1:
                target = r
            else:
                target = r + cfg.discount * q[cols, nxt].max(axis=1)
            old = q[cols, cur, action]
            q[cols, cur, action] = old + cfg.learning_rate * (target - old)
            total += r.mean()
            cur = nxt
        rewards[ep] = total / cfg.horizon
        g = np.argmax(q[cols, env.start], axis=1)
        greedy_rewards[ep] = env.act(env.start, g, id_order)[0].mean()
    tables = []
    for k in range(v):
        t = QTable(n)
        for c in range(n):
            if np.any(q[k, c] != 0):
                t.q[(env.apps[k], c, env.bins[k])] = q[k, c].copy()
        tables.append(t)
    return TrainResult(tables, rewards, greedy_rewards, time.perf_counter() - t0)


def greedy_choices(ch: Channel, tables: list[QTable]) -> list[int]:
    s = ch.scenario
    out = []
    for k, veh in enumerate(s.vehicles):
        best = max(ch.links[i][k].sinr for i in range(s.n_networks))
        a = tables[k].greedy((veh.app, veh.current_network, sinr_bin(best)))
        out.append(a if ch.mask.allowed[a, k] else FALLBACK)
    return out


def solve_qlearn(
    s: Scenario,
    cfg: LearnConfig = LearnConfig(),
    epoch: int | None = None,
    *,
    channel: Channel | None = None,
    trained: TrainResult | None = None,
) -> SolveReport:
    ch = _resolve(s, epoch, channel)
    if trained is None:
        trained = train(ch.scenario, cfg, channel=ch)
    t0 = time.perf_counter()
    choices = greedy_choices(ch, trained.tables)
    a0 = AssignmentMatrix.from_choices(ch.scenario, choices)
    a = allocate_and_evict(ch.scenario, a0, channel=ch, table=score_table(ch))
    infer = time.perf_counter() - t0
    diag = {
        "train_runtime": trained.runtime,
        "inference_runtime": infer,
        "convergence_episode": convergence_episode(trained.rewards),
        "greedy_choices": choices,
    }
    return make_report(
        "qlearn", ch, a, trained.runtime + infer, episodes=len(trained.rewards), diagnostics=diag
    )
