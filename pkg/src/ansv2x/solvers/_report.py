from __future__ import annotations

import math

import numpy as np

from ..channel import Channel
from ..feasibility import assignment_valid
from ..metrics import UtilityConfig
from ..model import AssignmentMatrix, SolveReport


def make_report(
    solver: str,
    ch: Channel,
    a: AssignmentMatrix,
    runtime: float,
    utility: UtilityConfig = UtilityConfig(),
    **extra,
) -> SolveReport:
    """Evaluate ``a`` on the channel's frozen draws."""
    s = ch.scenario
    delays = np.full(s.n_vehicles, np.nan)
    unassigned = []
    for k, i in enumerate(a.choices()):
        if i is None:
            unassigned.append(s.vehicles[k].id)
        else:
            delays[k] = ch.delay(i, k).t_total
    assigned = delays[~np.isnan(delays)]
    total = math.fsum(assigned)
    diagnostics = extra.pop("diagnostics", {})
    degraded = [s.vehicles[k].id for k in ch.mask.degraded_fallbacks() if a.alpha[0, k]]
    if degraded:
        diagnostics["degraded_fallback"] = degraded
    budgets = [v.app.latency_budget for v in s.vehicles]
    diagnostics["budget_violations"] = int(sum(1 for d, b in zip(delays, budgets) if d > b))
    diagnostics["channel_digest"] = ch.digest()
    valid, violations = assignment_valid(s, a, channel=ch)
    if violations:
        diagnostics["violations"] = violations
    return SolveReport(
        solver=solver,
        assignment=a,
        per_vehicle_delay=delays,
        total_delay=total,
        total_utility=utility.utility(assigned),
        mean_latency=total / len(assigned) if len(assigned) else 0.0,
        solver_runtime=runtime,
        feasible=valid,
        unassigned_vehicles=unassigned,
        diagnostics=diagnostics,
        **extra,
    )
