"""Exact branch-and-bound for the capacity-constrained assignment, plus an
exhaustive enumeration oracle.

Both work on the same deterministic cost matrix (handover at its expected
value). Objectives are summed with :func:`math.fsum`, which is correctly
rounded and therefore order independent: a bound that is a real-valued lower
bound stays a lower bound after rounding, and the oracle and the tree search
agree bit for bit on the optimum.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..channel import Channel, freeze
from ..delay import InfeasiblePair
from ..model import AssignmentMatrix, Scenario, SolveReport, validate_scenario
from ._report import make_report

DEFAULT_NODE_LIMIT = 2_000_000
EXHAUSTIVE_CAP = 2_000_000


class ScenarioInvalid(ValueError):
    pass


class OracleCapExceeded(RuntimeError):
    pass


def _resolve(s: Scenario, epoch: int | None, channel: Channel | None) -> Channel:
    if channel is not None:
        return channel
    errors = validate_scenario(s)
    if errors:
        raise ScenarioInvalid("; ".join(errors))
    return freeze(s, epoch)


def build_cost_matrix(s: Scenario, epoch: int | None = None, *, channel: Channel | None = None) -> np.ma.MaskedArray:
    """Per-pair dissemination time with handover at its expected value.

    Entries for screened-out or unusable pairs are masked.
    """
    ch = _resolve(s, epoch, channel)
    cost = ch.delays.base() + ch.expected_handover()
    masked = ~(ch.mask.allowed & ch.delays.usable)
    return np.ma.MaskedArray(np.where(masked, 0.0, cost), mask=masked)


@dataclass
class BnbNode:
    fixed: dict[int, int]  # vehicle column -> network
    lower_bound: float
    depth: int


@dataclass
class _Problem:
    options: list[list[tuple[float, int]]]  # per column, ascending (cost, network)
    bw: list[float]
    cpu: list[float]
    cap_bw: list[float]
    cap_cpu: list[float]

    @classmethod
    def of(cls, s: Scenario, cost: np.ma.MaskedArray) -> "_Problem":
        options = []
        data = cost.data.T.tolist()
        mask = np.ma.getmaskarray(cost).T.tolist()
        for k in range(cost.shape[1]):
            opts = sorted((c, i) for i, (c, m) in enumerate(zip(data[k], mask[k])) if not m)
            if not opts:
                raise InfeasiblePair(-1, s.vehicles[k].id, "no feasible network")
            options.append(opts)
        inf = math.inf
        return cls(
            options=options,
            bw=[v.bandwidth_demand for v in s.vehicles],
            cpu=[v.compute_grant_demand for v in s.vehicles],
            cap_bw=[inf] + [n.bandwidth_total for n in s.networks[1:]],
            cap_cpu=[inf] + [n.compute_total for n in s.networks[1:]],
        )


def relaxed_bound(p: _Problem, fixed_costs: list[float], undecided, res_bw, res_cpu) -> float:
    """Fixed cost plus each undecided vehicle's cheapest network that still fits it alone."""
    terms = list(fixed_costs)
    for k in undecided:
        b, f = p.bw[k], p.cpu[k]
        for c, i in p.options[k]:
            if res_bw[i] >= b and res_cpu[i] >= f:
                terms.append(c)
                break
        else:
            return math.inf
    return math.fsum(terms)


LP_SLACK = 1e-9  # absorbs the LP solver's feasibility/optimality tolerance


def lp_bound(p: _Problem, fixed_costs: list[float], undecided, res_bw, res_cpu) -> float:
    """Linear-programming relaxation of the remaining subproblem (fractional alpha).

    Tighter than :func:`relaxed_bound` but far more expensive per node. Needs scipy.
    """
    from scipy.optimize import linprog

    undecided = list(undecided)
    if not undecided:
        return math.fsum(fixed_costs)
    var: list[tuple[int, int]] = []
    cost: list[float] = []
    for k in undecided:
        fit = [(c, i) for c, i in p.options[k] if res_bw[i] >= p.bw[k] and res_cpu[i] >= p.cpu[k]]
        if not fit:
            return math.inf
        for c, i in fit:
            var.append((k, i))
            cost.append(c)
    col = {k: r for r, k in enumerate(undecided)}
    a_eq = np.zeros((len(undecided), len(var)))
    nets = sorted({i for _, i in var if i != 0})
    row = {i: r for r, i in enumerate(nets)}
    a_ub = np.zeros((2 * len(nets), len(var)))
    for x, (k, i) in enumerate(var):
        a_eq[col[k], x] = 1.0
        if i != 0:
            a_ub[row[i], x] = p.bw[k]
            a_ub[len(nets) + row[i], x] = p.cpu[k]
    b_ub = [res_bw[i] for i in nets] + [res_cpu[i] for i in nets]
    # Rescale capacity rows to order one so the solver tolerances are meaningful.
    scale = np.maximum(np.abs(a_ub).max(axis=1, initial=0.0), 1.0) if nets else None
    res = linprog(
        cost,
        A_ub=a_ub / scale[:, None] if nets else None,
        b_ub=np.array(b_ub) / scale if nets else None,
        A_eq=a_eq,
        b_eq=np.ones(len(undecided)),
        bounds=(0, 1),
        method="highs",
    )
    if res.status == 2:
        return math.inf
    if res.status != 0:
        return relaxed_bound(p, fixed_costs, undecided, res_bw, res_cpu)
    # Both bounds are admissible, so their maximum is too.
    return max(math.fsum(fixed_costs) + res.fun - LP_SLACK, relaxed_bound(p, fixed_costs, undecided, res_bw, res_cpu))


@dataclass
class _SearchResult:
    choice: tuple[int, ...]
    objective: float
    nodes: int
    optimal: bool
    nodes_log: list[BnbNode] = field(default_factory=list)


class _NodeLimit(Exception):
    pass


def branch_order(p: _Problem) -> list[int]:
    """Columns by decreasing regret (second-best minus best cost)."""

    def regret(k):
        o = p.options[k]
        return o[1][0] - o[0][0] if len(o) > 1 else math.inf

    return sorted(range(len(p.options)), key=lambda k: (-regret(k), k))


def branch_and_bound(
    p: _Problem,
    *,
    node_limit: int = DEFAULT_NODE_LIMIT,
    prune: bool = True,
    bound: Callable = relaxed_bound,
    record: bool = False,
) -> _SearchResult:
    v = len(p.options)
    order = branch_order(p)
    res_bw = list(p.cap_bw)
    res_cpu = list(p.cap_cpu)
    choice = [-1] * v
    fixed: list[float] = []
    log: list[BnbNode] = []

    # Everyone on the fallback row is always feasible and seeds the incumbent.
    fallback = [next((c for c, i in opts if i == 0), None) for opts in p.options]
    if all(c is not None for c in fallback):
        best_obj, best_key = math.fsum(fallback), (0,) * v
    else:
        best_obj, best_key = math.inf, None
    nodes = 0

    def visit(depth: int) -> None:
        nonlocal nodes, best_obj, best_key
        nodes += 1
        if nodes > node_limit:
            raise _NodeLimit
        if depth == v:
            total = math.fsum(fixed)
            key = tuple(choice)
            if record:
                log.append(BnbNode(dict(enumerate(key)), total, depth))
            if total < best_obj or (total == best_obj and (best_key is None or key < best_key)):
                best_obj, best_key = total, key
            return
        if prune or record:
            lb = bound(p, fixed, order[depth:], res_bw, res_cpu)
            if record:
                log.append(BnbNode({k: choice[k] for k in order[:depth]}, lb, depth))
            if prune and lb > best_obj:
                return
        k = order[depth]
        b, f = p.bw[k], p.cpu[k]
        for c, i in p.options[k]:
            if res_bw[i] < b or res_cpu[i] < f:
                continue
            choice[k] = i
            res_bw[i] -= b
            res_cpu[i] -= f
            fixed.append(c)
            visit(depth + 1)
            fixed.pop()
            res_bw[i] += b
            res_cpu[i] += f
            choice[k] = -1

    optimal = True
    try:
        visit(0)
    except _NodeLimit:
        optimal = False
        nodes = node_limit
    if best_key is None:
        raise InfeasiblePair(-1, -1, "no feasible assignment")
    return _SearchResult(best_key, best_obj, nodes, optimal, log)


def solve_bnb(
    s: Scenario,
    epoch: int | None = None,
    *,
    channel: Channel | None = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
    prune: bool = True,
    bound: Callable = relaxed_bound,
    record_nodes: bool = False,
) -> SolveReport:
    ch = _resolve(s, epoch, channel)
    t0 = time.perf_counter()
    cost = build_cost_matrix(ch.scenario, channel=ch)
    res = branch_and_bound(_Problem.of(ch.scenario, cost), node_limit=node_limit, prune=prune, bound=bound, record=record_nodes)
    a = AssignmentMatrix.from_choices(ch.scenario, list(res.choice))
    runtime = time.perf_counter() - t0
    diag = {"objective": res.objective}
    if record_nodes:
        diag["nodes"] = res.nodes_log
    return make_report("milp", ch, a, runtime, nodes_explored=res.nodes, optimal=res.optimal, diagnostics=diag)


def solve_exhaustive(
    s: Scenario, epoch: int | None = None, *, channel: Channel | None = None, cap: int = EXHAUSTIVE_CAP
) -> SolveReport:
    """Enumerate every assignment and keep the cheapest valid one."""
    ch = _resolve(s, epoch, channel)
    sc = ch.scenario
    n, v = ch.shape
    total = n**v
    if total > cap:
        raise OracleCapExceeded(f"{n}^{v} = {total} assignments exceeds cap {cap}")
    t0 = time.perf_counter()
    cm = build_cost_matrix(sc, channel=ch)
    cost = np.where(cm.mask, np.inf, cm.data)
    bw = np.array([x.bandwidth_demand for x in sc.vehicles])
    cpu = np.array([x.compute_grant_demand for x in sc.vehicles])
    cap_bw = np.array([x.bandwidth_total for x in sc.networks])
    cap_cpu = np.array([x.compute_total for x in sc.networks])
    weights = n ** np.arange(v - 1, -1, -1, dtype=np.int64)

    best_obj, best_idx = math.inf, None
    chunk = 1 << 17
    cols = np.arange(v)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // weights[None, :]) % n  # column 0 most significant
        approx = cost[digits, cols[None, :]].sum(axis=1)
        ok = np.isfinite(approx)
        for i in range(1, n):
            on = digits == i
            ok &= (on * bw).sum(axis=1) <= cap_bw[i]
            ok &= (on * cpu).sum(axis=1) <= cap_cpu[i]
        if not ok.any():
            continue
        lo = approx[ok].min()
        near = np.flatnonzero(ok & (approx <= lo + 1e-9))
        for r in near:
            exact = math.fsum(cost[digits[r], cols])
            if exact < best_obj or (exact == best_obj and idx[r] < best_idx):
                best_obj, best_idx = exact, int(idx[r])
    if best_idx is None:
        raise InfeasiblePair(-1, -1, "no feasible assignment")
    choice = [int(d) for d in (best_idx // weights) % n]
    a = AssignmentMatrix.from_choices(sc, choice)
    runtime = time.perf_counter() - t0
    return make_report(
        "exhaustive", ch, a, runtime, nodes_explored=total, optimal=True, diagnostics={"objective": best_obj}
    )
