"""Small hand-placed scenarios shared by the test modules."""
from __future__ import annotations

from dataclasses import replace

from ansv2x.model import (
    AppClass,
    HandoverMode,
    HandoverModel,
    RadioParams,
    RatClass,
    Scenario,
)
from ansv2x.scenario import make_network, make_vehicle

NO_SHADOW = RadioParams(shadowing_sigma_db=0.0)
EXPECTED = HandoverModel(mode=HandoverMode.ExpectedValue)


def net(i, rat, pos, **kw):
    return replace(make_network(i, rat, pos), **kw)


def veh(j, app, pos, dest, speed=10.0, current=0, **kw):
    return replace(make_vehicle(j, app, pos, dest, speed, current), **kw)


def scene(networks, vehicles, radio=NO_SHADOW, handover=EXPECTED, **kw) -> Scenario:
    return Scenario(networks=tuple(networks), vehicles=tuple(vehicles), radio=radio, handover=handover, **kw)


def adhoc(pos=(0.0, 200.0), **kw):
    return net(0, RatClass.AdHocCurrent, pos, **kw)


def two_rat_fixture(app: AppClass) -> Scenario:
    """One vehicle heading +x; DSRC and a slower-core 5G cell co-located 50 m ahead.

    5G has the stronger link (higher rate) but a 30 ms base latency, so its
    total delay exceeds DSRC's.
    """
    return scene(
        [
            adhoc(),
            net(1, RatClass.DSRC, (50.0, 0.0)),
            net(2, RatClass.NR5G, (50.0, 0.0), base_latency=0.030),
        ],
        [veh(1, app, (0.0, 0.0), (100.0, 0.0))],
    )


def dominant_fixture(n_vehicles: int = 1) -> Scenario:
    """Network 1 (5G, 40 m away) beats every other option for every vehicle."""
    vehicles = [
        veh(j, AppClass.Safety if j % 2 else AppClass.Infotainment, (0.0, 10.0 * (j - 1)), (100.0, 10.0 * (j - 1)))
        for j in range(1, n_vehicles + 1)
    ]
    return scene(
        [adhoc((0.0, 300.0)), net(1, RatClass.NR5G, (40.0, 0.0)), net(2, RatClass.LTE4G, (-400.0, 0.0))],
        vehicles,
    )


def capacity_fixture(bandwidth_total: float = 5e6) -> Scenario:
    """Two infotainment vehicles that both prefer network 1, which fits only one."""
    return scene(
        [
            adhoc(),
            net(1, RatClass.NR5G, (30.0, 0.0), bandwidth_total=bandwidth_total),
            net(2, RatClass.LTE4G, (150.0, 0.0)),
        ],
        [
            veh(1, AppClass.Infotainment, (0.0, 0.0), (100.0, 0.0)),
            veh(2, AppClass.Infotainment, (0.0, 5.0), (100.0, 5.0)),
        ],
    )
