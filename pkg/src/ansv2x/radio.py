"""Log-distance propagation, SNR, Shannon rate and direction geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import NetworkNode, RadioParams, VehicleAgent

SHADOWING_STREAM = 1


class DirectionUndefined(ValueError):
    """A direction vector has zero length."""


@dataclass(frozen=True)
class LinkState:
    received_power: float  # dBm
    noise: float  # dBm
    sinr: float  # dB
    rate: float  # bit/s at the vehicle's bandwidth demand; 0 out of coverage
    distance: float  # m
    angle: float  # deg, 0 when heading is undefined
    alignment: float  # cosine in [-1, 1], 0 when undefined
    in_coverage: bool
    heading_defined: bool = True


def shadowing_draw(seed: int, i: int, j: int, epoch: int, sigma_db: float) -> float:
    """Frozen shadowing sample for network ``i`` / vehicle ``j`` at ``epoch``."""
    if sigma_db == 0:
        return 0.0
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, SHADOWING_STREAM, i, j, epoch])
    return float(sigma_db * rng.standard_normal())


def distance(a, b) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def received_power(n: NetworkNode, v: VehicleAgent, r: RadioParams, shadow_db: float = 0.0) -> float:
    d = max(distance(n.position, v.position), r.reference_distance)
    return (
        n.tx_power_dbm
        - r.reference_loss_db
        - 10.0 * r.pathloss_exponent * math.log10(d / r.reference_distance)
        + shadow_db
    )


def data_rate(bandwidth: float, sinr_db: float, efficiency: float = 1.0) -> float:
    if bandwidth <= 0:
        return 0.0
    return efficiency * bandwidth * math.log2(1.0 + 10.0 ** (sinr_db / 10.0))


def _cosine(a, b) -> float:
    na, nb = math.hypot(*a), math.hypot(*b)
    if na == 0 or nb == 0:
        raise DirectionUndefined("zero-length direction vector")
    # normalise first: na * nb can underflow for tiny vectors
    c = (a[0] / na) * (b[0] / nb) + (a[1] / na) * (b[1] / nb)
    return min(1.0, max(-1.0, c))


def _to_network(v: VehicleAgent, n: NetworkNode):
    return (n.position[0] - v.position[0], n.position[1] - v.position[1])


def alignment(v: VehicleAgent, n: NetworkNode) -> float:
    """Cosine between the vehicle->destination and vehicle->network vectors."""
    to_dest = (v.destination[0] - v.position[0], v.destination[1] - v.position[1])
    return _cosine(to_dest, _to_network(v, n))


def heading_angle(v: VehicleAgent, n: NetworkNode) -> float:
    """Angle in degrees between the heading and the bearing to the network."""
    return math.degrees(math.acos(_cosine(v.velocity, _to_network(v, n))))


def direction_alignment(v: VehicleAgent, n: NetworkNode) -> tuple[float, float]:
    """Return ``(D, theta)``; raises :class:`DirectionUndefined` on degenerate geometry."""
    return alignment(v, n), heading_angle(v, n)


def link_state(
    n: NetworkNode, v: VehicleAgent, r: RadioParams, *, seed: int = 0, epoch: int = 0
) -> LinkState:
    shadow = shadowing_draw(seed, n.id, v.id, epoch, r.shadowing_sigma_db)
    p = received_power(n, v, r, shadow)
    noise = r.noise_floor_dbm
    sinr = p - noise
    try:
        d_ij = alignment(v, n)
    except DirectionUndefined:
        d_ij = 0.0
    try:
        theta = heading_angle(v, n)
        heading_defined = True
    except DirectionUndefined:
        # stationary vehicle: the angular screen is bypassed
        theta, heading_defined = 0.0, False
    covered = p >= r.power_threshold_dbm and sinr >= r.sinr_threshold_db and theta <= r.angle_threshold
    rate = data_rate(v.bandwidth_demand, sinr, r.shannon_efficiency) if covered else 0.0
    return LinkState(
        received_power=p,
        noise=noise,
        sinr=sinr,
        rate=rate,
        distance=distance(n.position, v.position),
        angle=theta,
        alignment=d_ij,
        in_coverage=covered,
        heading_defined=heading_defined,
    )
