"""Aggregate metrics shared by the solvers and the harness."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class UtilityConfig:
    t_ref: float = 0.1  # s

    def utility(self, delays: Iterable[float]) -> float:
        """Sum of ``1 / (1 + T_j / t_ref)`` over assigned vehicles."""
        return math.fsum(1.0 / (1.0 + t / self.t_ref) for t in delays)


def load_shares(choices, n_networks: int) -> np.ndarray:
    counts = np.zeros(n_networks)
    for i in choices:
        if i is not None:
            counts[i] += 1
    total = counts.sum()
    return counts / total if total else counts


def load_entropy(choices, n_networks: int) -> float:
    """Shannon entropy (bits) of the vehicle share per network."""
    p = load_shares(choices, n_networks)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) + 0.0


def convergence_episode(curve, fraction: float = 0.9, window: int = 50) -> int:
    """First episode whose moving average covers ``fraction`` of the start-to-final rise."""
    curve = np.asarray(curve, dtype=float)
    if len(curve) == 0:
        return 0
    ma = moving_average(curve, min(window, len(curve)))
    start, final = ma[0], ma[-1]
    if final <= start:
        return 0
    target = start + fraction * (final - start)
    return int(np.argmax(ma >= target)) + min(window, len(curve)) - 1


def moving_average(x, window: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    c = np.cumsum(np.insert(x, 0, 0.0))
    return (c[window:] - c[:-window]) / window
