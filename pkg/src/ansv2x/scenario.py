"""Synthetic scenario generation, waypoint mobility and trace replay."""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import (
    APP_DEFAULTS,
    RAT_DEFAULTS,
    AppClass,
    NetworkNode,
    RatClass,
    Scenario,
    VehicleAgent,
)

MOBILITY_STREAM = 3
SPEED_RANGE = (5.0, 20.0)  # m/s
DEFAULT_RAT_CYCLE = (RatClass.NR5G, RatClass.LTE4G, RatClass.DSRC)
TRACE_HEADER = ["time_ms", "vehicle_id", "x_m", "y_m", "heading_deg", "speed_mps"]


class Density(int, enum.Enum):
    Low = 100
    Medium = 200
    High = 300


class TraceError(ValueError):
    pass


def _unit(dx: float, dy: float) -> tuple[float, float]:
    d = math.hypot(dx, dy)
    return (dx / d, dy / d) if d > 0 else (0.0, 0.0)


def make_network(i: int, rat: RatClass, position) -> NetworkNode:
    return NetworkNode(id=i, rat=rat, position=(float(position[0]), float(position[1])), **RAT_DEFAULTS[rat])


def make_vehicle(j: int, app: AppClass, position, destination, speed: float, current: int = 0) -> VehicleAgent:
    speed = float(speed)
    ux, uy = _unit(destination[0] - position[0], destination[1] - position[1])
    return VehicleAgent(
        id=j,
        position=(float(position[0]), float(position[1])),
        velocity=(float(speed * ux), float(speed * uy)),
        destination=(float(destination[0]), float(destination[1])),
        app=app,
        current_network=current,
        **APP_DEFAULTS[app],
    )


def generate(
    density: Density | int = Density.Medium,
    area_km2: float = 0.05,
    n: int = 3,
    *,
    seed: int = 0,
    rat_mix: Sequence[RatClass] | None = None,
    safety_ratio: float = 0.5,
    n_vehicles: int | None = None,
    **scenario_fields,
) -> Scenario:
    """Random scenario on a square of ``area_km2``.

    ``n_vehicles`` overrides ``round(density * area)`` so sweeps can pin V.
    Index 0 is the ad hoc network every vehicle starts on, sited at the centre;
    the ``n`` candidates sit on a jittered grid and cycle through ``rat_mix``.
    """
    if n < 1 or area_km2 <= 0:
        raise ValueError("need n >= 1 and area_km2 > 0")
    v = int(round(float(density) * area_km2)) if n_vehicles is None else int(n_vehicles)
    if v < 1:
        raise ValueError(f"scenario would have {v} vehicles")
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, n, v])
    side = math.sqrt(area_km2) * 1000.0
    rats = list(rat_mix or DEFAULT_RAT_CYCLE)

    networks = [make_network(0, RatClass.AdHocCurrent, (side / 2, side / 2))]
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    cell_w, cell_h = side / cols, side / rows
    for i in range(1, n + 1):
        r, c = divmod(i - 1, cols)
        x = (c + 0.5 + rng.uniform(-0.25, 0.25)) * cell_w
        y = (r + 0.5 + rng.uniform(-0.25, 0.25)) * cell_h
        networks.append(make_network(i, rats[(i - 1) % len(rats)], (x, y)))

    vehicles = []
    for j in range(1, v + 1):
        pos = rng.uniform(0, side, size=2)
        dest = rng.uniform(0, side, size=2)
        speed = rng.uniform(*SPEED_RANGE)
        app = AppClass.Safety if rng.random() < safety_ratio else AppClass.Infotainment
        vehicles.append(make_vehicle(j, app, pos, dest, speed))
    return Scenario(networks=tuple(networks), vehicles=tuple(vehicles), rng_seed=int(seed), **scenario_fields)


def area_side(s: Scenario) -> float:
    """Side of the square the generator used, recovered from the ad hoc site."""
    return 2.0 * s.networks[0].position[0]


def step(s: Scenario, dt: float = 0.1, *, side: float | None = None) -> Scenario:
    """Advance every vehicle by ``dt`` and bump the epoch.

    A vehicle that would pass its destination stops there and heads for a
    new destination drawn from ``(seed, epoch, vehicle)``.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    side = area_side(s) if side is None else side
    out = []
    for v in s.vehicles:
        speed = v.speed
        if speed == 0:
            out.append(v)
            continue
        remaining = math.hypot(v.destination[0] - v.position[0], v.destination[1] - v.position[1])
        if speed * dt < remaining:
            pos = (v.position[0] + v.velocity[0] * dt, v.position[1] + v.velocity[1] * dt)
            out.append(replace(v, position=pos))
            continue
        rng = np.random.default_rng([int(s.rng_seed) & 0xFFFFFFFFFFFFFFFF, MOBILITY_STREAM, s.epoch, v.id])
        dest = tuple(float(x) for x in rng.uniform(0, side, size=2))
        pos = v.destination
        ux, uy = _unit(dest[0] - pos[0], dest[1] - pos[1])
        out.append(replace(v, position=pos, destination=dest, velocity=(speed * ux, speed * uy)))
    return replace(s, vehicles=tuple(out), epoch=s.epoch + 1)


# -- traces -----------------------------------------------------------------


def export_trace(snapshots: Sequence[tuple[int, Scenario]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for t, snap in snapshots:
            for v in snap.vehicles:
                heading = math.degrees(math.atan2(v.velocity[1], v.velocity[0]))
                w.writerow([int(t), v.id, *(repr(float(x)) for x in (v.position[0], v.position[1], heading, v.speed))])


def ingest_trace(path: str | Path, base: Scenario) -> list[tuple[int, Scenario]]:
    """One snapshot of ``base`` per timestamp, kinematics replaced from the trace.

    Headings are degrees counter-clockwise from +x. A vehicle's destination is
    its last traced position (projected one second ahead once it gets there).
    Vehicles absent at a timestamp keep their last known state.
    """
    known = {v.id for v in base.vehicles}
    rows: list[tuple[int, int, float, float, float, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TraceError("no rows")
        if [h.strip() for h in header] != TRACE_HEADER:
            raise TraceError(f"line 1: expected header {','.join(TRACE_HEADER)}")
        prev = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRACE_HEADER):
                raise TraceError(f"line {lineno}: expected {len(TRACE_HEADER)} fields, got {len(row)}")
            try:
                t, vid = int(row[0]), int(row[1])
                x, y, hdg, spd = (float(c) for c in row[2:])
            except ValueError as exc:
                raise TraceError(f"line {lineno}: {exc}") from exc
            if not all(math.isfinite(c) for c in (x, y, hdg, spd)) or spd < 0:
                raise TraceError(f"line {lineno}: non-finite value or negative speed")
            if vid not in known:
                raise TraceError(f"line {lineno}: unknown vehicle id {vid}")
            if prev is not None and (t, vid) <= prev:
                raise TraceError(f"line {lineno}: rows must be sorted by time then vehicle id")
            prev = (t, vid)
            rows.append((t, vid, x, y, hdg, spd))
    if not rows:
        raise TraceError("no rows")

    last_pos = {}
    for t, vid, x, y, *_ in rows:
        last_pos[vid] = (x, y)
    state = {v.id: v for v in base.vehicles}
    snapshots = []
    by_time: dict[int, list] = {}
    for r in rows:
        by_time.setdefault(r[0], []).append(r)
    for epoch, (t, group) in enumerate(sorted(by_time.items())):
        for _, vid, x, y, hdg, spd in group:
            vel = (spd * math.cos(math.radians(hdg)), spd * math.sin(math.radians(hdg)))
            dest = last_pos[vid]
            if dest == (x, y):
                dest = (x + vel[0], y + vel[1]) if spd > 0 else (x, y)
            state[vid] = replace(state[vid], position=(x, y), velocity=vel, destination=dest)
        vehicles = tuple(state[v.id] for v in base.vehicles)
        snapshots.append((t, replace(base, vehicles=vehicles, epoch=epoch)))
    return snapshots
