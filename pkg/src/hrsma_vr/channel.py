"""Imperfect-CSI channel model.

Each user sees a deterministic line-of-sight style vector

    h_bar[m] = g * exp(j * m * phi),   m = 0..M-1

plus a feedback error drawn i.i.d. per antenna from CN(0, sigma^2) with
``sigma^2 = g * P0 ** (-beta)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "realize_constant_channel",
    "noise_error_variance",
    "sample_channel",
    "rms",
]


@dataclass(frozen=True)
class ChannelParams:
    """Channel parameters for one user, or for K users when array valued.

    ``gain``, ``phase`` and ``dof`` are scalars or equal-length arrays;
    ``power_linear`` is the BS power budget on a linear scale.
    """

    num_antennas: int
    gain: np.ndarray | float
    phase: np.ndarray | float
    dof: np.ndarray | float
    power_linear: float

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be >= 1")
        if np.any(np.asarray(self.gain) < 0):
            raise ValueError("gain must be nonnegative")
        phase = np.asarray(self.phase)
        if np.any(phase < 0) or np.any(phase > 2 * np.pi):
            raise ValueError("phase must lie in [0, 2*pi]")
        if np.any(np.asarray(self.dof) < 0):
            raise ValueError("dof must be nonnegative")
        if self.power_linear <= 0:
            raise ValueError("power_linear must be positive")


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the channel; trailing axis is the antenna index."""

    constant_part: np.ndarray
    error_part: np.ndarray
    full_channel: np.ndarray
    rms: np.ndarray
    squared_norm: np.ndarray


def realize_constant_channel(g, phi, M):
    """Return ``g * [1, e^{j phi}, ..., e^{j (M-1) phi}]``.

    ``g`` and ``phi`` may be arrays of shape (K,), giving a (K, M) result.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    g = np.asarray(g, dtype=float)
    phi = np.asarray(phi, dtype=float)
    m = np.arange(M)
    return g[..., None] * np.exp(1j * phi[..., None] * m)


def noise_error_variance(g, P0, beta):
    """Feedback-error variance ``g * P0 ** (-beta)``."""
    if np.any(np.asarray(P0) <= 0):
        raise ValueError(f"P0 must be positive, got {P0}")
    return np.asarray(g, dtype=float) * np.asarray(P0, dtype=float) ** (
        -np.asarray(beta, dtype=float)
    )


def rms(h):
    """Root mean square over the antenna axis."""
    h = np.asarray(h)
    return np.sqrt(np.sum(np.abs(h) ** 2, axis=-1) / h.shape[-1])


def sample_channel(params: ChannelParams, rng: np.random.Generator) -> ChannelRealization:
    """Draw one imperfect channel realization per user."""
    M = params.num_antennas
    h_bar = realize_constant_channel(params.gain, params.phase, M)
    var = noise_error_variance(params.gain, params.power_linear, params.dof)
    scale = np.sqrt(np.broadcast_to(var, h_bar.shape[:-1]) / 2.0)[..., None]
    noise = rng.standard_normal(h_bar.shape + (2,))
    h_err = scale * (noise[..., 0] + 1j * noise[..., 1])
    h = h_bar + h_err
    sq = np.sum(h.real**2 + h.imag**2, axis=-1)
    return ChannelRealization(
        constant_part=h_bar,
        error_part=h_err,
        full_channel=h,
        rms=np.sqrt(sq / M),
        squared_norm=sq,
    )
