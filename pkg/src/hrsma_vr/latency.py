"""Per-user transmission and FoV pre-rendering latency, and the reward."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rsma_phy import group_index

__all__ = [
    "INFINITE_LATENCY",
    "ComputeState",
    "LatencyReport",
    "transmission_latency",
    "rendering_latency",
    "system_latency_and_reward",
]

#: Latency reported for a user whose rate is zero.
INFINITE_LATENCY = math.inf


@dataclass(frozen=True)
class ComputeState:
    cpu_hz: float
    available_fraction: np.ndarray
    cpu_shares: np.ndarray
    render_cycles: float = 1.0

    def __post_init__(self):
        if self.cpu_hz <= 0:
            raise ValueError("cpu_hz must be positive")
        if self.render_cycles <= 0:
            raise ValueError("render_cycles must be positive")


@dataclass(frozen=True)
class LatencyReport:
    l_transmit: np.ndarray
    l_render: np.ndarray
    l_total: np.ndarray
    max_latency: float
    reward: float


def transmission_latency(n_bits, bandwidth_hz, rate):
    """Seconds to push ``n_bits`` at ``rate`` bits/s/Hz over ``bandwidth_hz``.

    Zero rate yields :data:`INFINITE_LATENCY`.
    """
    rate = np.asarray(rate, dtype=float)
    if np.any(rate < 0):
        raise ValueError("rate must be nonnegative")
    if np.any(np.asarray(n_bits) <= 0) or bandwidth_hz <= 0:
        raise ValueError("n_bits and bandwidth must be positive")
    with np.errstate(divide="ignore"):
        out = np.where(rate > 0, n_bits / (bandwidth_hz * np.where(rate > 0, rate, 1.0)),
                       INFINITE_LATENCY)
    return out if out.ndim else float(out)


def rendering_latency(member, f, F, eta_hz, W=1.0):
    """Pre-rendering latency ``W * member / (f * F * eta)``."""
    member = np.asarray(member, dtype=bool)
    f = np.asarray(f, dtype=float)
    F = np.asarray(F, dtype=float)
    if eta_hz <= 0:
        raise ValueError("eta_hz must be positive")
    bad = member & ((f <= 0) | (F <= 0))
    if np.any(bad):
        raise ValueError("cpu share and available fraction must be positive for members")
    safe = np.where(member, f * F, 1.0)
    out = np.where(member, W / (safe * eta_hz), 0.0)
    return out if out.ndim else float(out)


def system_latency_and_reward(rates, compute: ComputeState, membership, n_bits, bandwidth_hz):
    """Compose transmission and rendering latency; reward is 1/max-latency.

    ``n_bits`` may be a scalar or one value per user. The reward is 0 when
    any user has zero rate.
    """
    membership = np.asarray(membership)
    groups = group_index(membership)
    K = membership.shape[1]
    l_v = np.broadcast_to(transmission_latency(n_bits, bandwidth_hz, rates), (K,))
    is_member = membership[groups, np.arange(K)] == 1
    f = np.asarray(compute.cpu_shares, dtype=float)[groups]
    F = np.asarray(compute.available_fraction, dtype=float)[groups]
    l_r = rendering_latency(is_member, f, F, compute.cpu_hz, compute.render_cycles)
    l_s = l_v + l_r
    worst = float(np.max(l_s))
    reward = 0.0 if math.isinf(worst) else 1.0 / worst
    return LatencyReport(
        l_transmit=np.asarray(l_v, dtype=float),
        l_render=np.asarray(l_r, dtype=float),
        l_total=l_s,
        max_latency=worst,
        reward=reward,
    )
