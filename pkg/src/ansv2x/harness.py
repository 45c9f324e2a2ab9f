"""Solver comparison, (N, V) Monte Carlo sweeps and result files."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .channel import Channel, freeze
from .metrics import load_entropy, load_shares
from .model import Scenario, SolveReport
from .scenario import Density, generate
from .solvers import LearnConfig, solve_ans, solve_bnb, solve_qlearn
from .solvers.bnb import DEFAULT_NODE_LIMIT

log = logging.getLogger(__name__)

SOLVER_NAMES = ("milp", "ans", "qlearn")
CSV_COLUMNS = [
    "n", "v", "rep", "solver", "utility", "total_delay_s", "mean_latency_s",
    "runtime_s", "nodes", "episodes", "load_entropy", "feasible",
]


class FairnessError(AssertionError):
    pass


def run_solver(
    name: str,
    ch: Channel,
    *,
    learn: LearnConfig = LearnConfig(),
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> SolveReport:
    s = ch.scenario
    if name == "milp":
        return solve_bnb(s, channel=ch, node_limit=node_limit)
    if name == "ans":
        return solve_ans(s, channel=ch)
    if name == "qlearn":
        return solve_qlearn(s, learn, channel=ch)
    raise ValueError(f"unknown solver {name!r}")


@dataclass
class Comparison:
    digest: str
    reports: dict[str, SolveReport]

    def gap(self, name: str, reference: str = "milp") -> float:
        """Relative utility shortfall of ``name`` against ``reference``."""
        u_ref = self.reports[reference].total_utility
        return (u_ref - self.reports[name].total_utility) / u_ref

    def to_dict(self) -> dict:
        out = {"channel_digest": self.digest, "solvers": {}}
        for name, r in self.reports.items():
            entry = report_to_dict(r)
            if "milp" in self.reports:
                entry["utility_gap"] = self.gap(name)
            out["solvers"][name] = entry
        return out


def report_to_dict(r: SolveReport) -> dict:
    n = r.assignment.alpha.shape[0]
    choices = r.assignment.choices()
    return {
        "solver": r.solver,
        "assignment": choices,
        "per_vehicle_delay_s": [None if math.isnan(x) else float(x) for x in r.per_vehicle_delay],
        "total_delay_s": r.total_delay,
        "total_utility": r.total_utility,
        "mean_latency_s": r.mean_latency,
        "runtime_s": r.solver_runtime,
        "nodes_explored": r.nodes_explored,
        "episodes": r.episodes,
        "feasible": r.feasible,
        "optimal": r.optimal,
        "unassigned_vehicles": r.unassigned_vehicles,
        "load_shares": [float(x) for x in load_shares(choices, n)],
        "load_entropy": load_entropy(choices, n),
        "budget_violations": r.diagnostics.get("budget_violations", 0),
        "degraded_fallback": r.diagnostics.get("degraded_fallback", []),
    }


def compare(
    s: Scenario,
    solvers: Sequence[str] = SOLVER_NAMES,
    epoch: int | None = None,
    *,
    channel: Channel | None = None,
    learn: LearnConfig = LearnConfig(),
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> Comparison:
    """Run each solver on one frozen channel and check they all saw the same draws."""
    ch = freeze(s, epoch) if channel is None else channel
    digest = ch.digest()
    reports = {}
    for name in solvers:
        try:
            rep = run_solver(name, ch, learn=learn, node_limit=node_limit)
        except Exception as exc:
            raise RuntimeError(f"solver {name} failed: {exc}") from exc
        if rep.diagnostics.get("channel_digest") != digest or ch.digest() != digest:
            raise FairnessError(f"solver {name} did not consume the shared channel")
        reports[name] = rep
    return Comparison(digest, reports)


@dataclass(frozen=True)
class SweepSpec:
    n_values: tuple[int, ...] = (2, 3, 4, 5)
    v_values: tuple[int, ...] = (5, 7, 9, 12)
    repetitions: int = 30
    solvers: tuple[str, ...] = SOLVER_NAMES
    seed_base: int = 0
    density: Density = Density.Medium
    learn: LearnConfig = LearnConfig()
    node_limit: int = DEFAULT_NODE_LIMIT

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        unknown = set(self.solvers) - set(SOLVER_NAMES)
        if unknown:
            raise ValueError(f"unknown solvers {sorted(unknown)}")

    def scenario(self, n: int, v: int, rep: int) -> Scenario:
        return generate(self.density, v / int(self.density), n, seed=self.seed_base + rep, n_vehicles=v)


@dataclass
class Row:
    n: int
    v: int
    rep: int
    solver: str
    utility: float
    total_delay_s: float
    mean_latency_s: float
    runtime_s: float
    nodes: int
    episodes: int
    load_entropy: float
    feasible: bool

    @classmethod
    def of(cls, n, v, rep, r: SolveReport) -> "Row":
        nn = r.assignment.alpha.shape[0]
        return cls(
            n, v, rep, r.solver, r.total_utility, r.total_delay, r.mean_latency, r.solver_runtime,
            r.nodes_explored, r.episodes, load_entropy(r.assignment.choices(), nn), r.feasible,
        )

    @classmethod
    def failed(cls, n, v, rep, solver) -> "Row":
        nan = math.nan
        return cls(n, v, rep, solver, nan, nan, nan, nan, 0, 0, nan, False)

    def key(self):
        return (self.n, self.v, self.rep, SOLVER_NAMES.index(self.solver))


def sweep(spec: SweepSpec, progress=None) -> list[Row]:
    rows = []
    for n in spec.n_values:
        for v in spec.v_values:
            for rep in range(spec.repetitions):
                s = spec.scenario(n, v, rep)
                ch = freeze(s)
                learn = replace(spec.learn, rng_seed=s.rng_seed)
                for name in spec.solvers:
                    try:
                        r = run_solver(name, ch, learn=learn, node_limit=spec.node_limit)
                        rows.append(Row.of(n, v, rep, r))
                    except Exception:
                        log.exception("cell n=%d v=%d rep=%d solver=%s failed", n, v, rep, name)
                        rows.append(Row.failed(n, v, rep, name))
                if progress is not None:
                    progress(n, v, rep)
    rows.sort(key=Row.key)
    return rows


def aggregate(rows: Iterable[Row]) -> dict[tuple[int, int, str], dict[str, float]]:
    """Mean and std of each metric per (n, v, solver)."""
    groups: dict[tuple[int, int, str], list[Row]] = {}
    for r in rows:
        groups.setdefault((r.n, r.v, r.solver), []).append(r)
    out = {}
    for key, rs in sorted(groups.items()):
        stats = {}
        for col in ("utility", "total_delay_s", "mean_latency_s", "runtime_s", "nodes", "load_entropy"):
            x = np.array([getattr(r, col) for r in rs], dtype=float)
            stats[col] = float(np.nanmean(x)) if np.isfinite(x).any() else math.nan
            stats[col + "_std"] = float(np.nanstd(x)) if np.isfinite(x).any() else math.nan
        stats["count"] = len(rs)
        out[key] = stats
    return out


def utility_gaps(rows: Iterable[Row], solver: str = "ans") -> dict[tuple[int, int], list[float]]:
    """Per-cell list of per-repetition utility gaps of ``solver`` against milp."""
    by = {(r.n, r.v, r.rep, r.solver): r for r in rows}
    out: dict[tuple[int, int], list[float]] = {}
    for (n, v, rep, name), r in sorted(by.items()):
        if name != solver or (n, v, rep, "milp") not in by:
            continue
        u = by[(n, v, rep, "milp")].utility
        out.setdefault((n, v), []).append((u - r.utility) / u)
    return out


# -- export -----------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def export_csv(rows: Sequence[Row], path: str | Path) -> None:
    if not rows:
        raise ValueError("no results to export")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])


def export_json(rows: Sequence[Row], path: str | Path) -> None:
    if not rows:
        raise ValueError("no results to export")
    data = []
    for r in rows:
        d = asdict(r)
        item = {}
        for c in CSV_COLUMNS:
            val = d[c]
            if isinstance(val, float):
                val = float(f"{val:.9g}") if math.isfinite(val) else None
            item[c] = val
        data.append(item)
    Path(path).write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")


def export(rows: Sequence[Row], path: str | Path, format: str | None = None) -> None:
    fmt = format or Path(path).suffix.lstrip(".").lower() or "csv"
    if fmt == "csv":
        export_csv(rows, path)
    elif fmt == "json":
        export_json(rows, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_csv(path: str | Path) -> list[Row]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for d in csv.DictReader(fh):
            rows.append(
                Row(
                    n=int(d["n"]), v=int(d["v"]), rep=int(d["rep"]), solver=d["solver"],
                    utility=float(d["utility"]), total_delay_s=float(d["total_delay_s"]),
                    mean_latency_s=float(d["mean_latency_s"]), runtime_s=float(d["runtime_s"]),
                    nodes=int(d["nodes"]), episodes=int(d["episodes"]),
                    load_entropy=float(d["load_entropy"]), feasible=d["feasible"] == "true",
                )
            )
    return rows


def load_json(path: str | Path) -> list[Row]:
    out = []
    for d in json.loads(Path(path).read_text(encoding="utf-8")):
        d = {k: (math.nan if v is None else v) for k, v in d.items()}
        out.append(Row(**d))
    return out
