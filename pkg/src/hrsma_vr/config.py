"""System parameters for the RSMA 360-degree video streaming simulator."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

__all__ = ["QualityTier", "QUALITY_TABLE", "SystemConfig", "db_to_linear"]


@dataclass(frozen=True)
class QualityTier:
    """Video quality tier.

    ``bits_multiplier`` scales the per-frame payload relative to the 720p
    default (pixel-count ratio). ``cpu_usage`` is the mean fraction of the
    CPU already consumed by pre-rendering at that quality; the available
    fraction offered to the scheduler is ``1 - usage``.
    """

    name: str
    width: int
    height: int
    bits_multiplier: float
    cpu_usage: float


# Synthetic calibration: only the ordering (higher quality -> more CPU and
# more bits) is taken from the measured CPU/quality relation.
QUALITY_TABLE: dict[str, QualityTier] = {
    "360p": QualityTier("360p", 640, 360, 0.25, 0.35),
    "720p": QualityTier("720p", 1280, 720, 1.0, 0.50),
    "1080p": QualityTier("1080p", 1920, 1080, 2.25, 0.65),
    "1920p": QualityTier("1920p", 3840, 1920, 8.0, 0.80),
}


def db_to_linear(value_db):
    """Convert a power ratio from dB to linear scale."""
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def _default_gains():
    return (1.0, 0.95, 0.9, 0.85, 0.8, 0.75)


def _default_phases():
    return tuple(float(v) for v in np.linspace(0.0, np.pi, 6))


@dataclass(frozen=True)
class SystemConfig:
    """Scalars of the simulated cell plus override knobs.

    Defaults: M = K = 6, G = 3, P0 = 20 dB, B = 100 MHz, N_x = 0.1 MB,
    eta = 2.3 GHz, beta = 0.6. Per-user gains and phases are synthetic,
    spread over [0.75, 1] and [0, pi].
    """

    num_antennas: int = 6
    num_users: int = 6
    num_groups: int = 3
    power_db: float = 20.0
    bandwidth_hz: float = 100e6
    frame_bits: float = 8e5
    cpu_hz: float = 2.3e9
    dof: float = 0.6
    gains: tuple = field(default_factory=_default_gains)
    phases: tuple = field(default_factory=_default_phases)
    render_cycles: float = 1.0
    quality: str = "720p"
    cpu_noise_std: float = 0.05
    episode_length: int = 103
    step_seconds: float = 2.0
    fov_deg: tuple = (100.0, 100.0)
    full_frame_deg: tuple = (360.0, 360.0)
    scheme: str = "RSMA"
    clustering_enabled: bool = True
    literal_group_min: bool = False
    strict_cpu_sum: bool = False
    num_attractors: int = 3
    behaviour_noise_deg: float = 4.0
    behaviour_switch_prob: float = 0.02
    cpu_trace_path: str | None = None
    behaviour_trace_path: str | None = None

    def __post_init__(self):
        if self.num_antennas < 1 or self.num_users < 1 or self.num_groups < 1:
            raise ValueError("num_antennas, num_users and num_groups must be >= 1")
        if len(self.gains) != self.num_users or len(self.phases) != self.num_users:
            raise ValueError(
                f"gains/phases need {self.num_users} entries, got "
                f"{len(self.gains)}/{len(self.phases)}"
            )
        if any(g < 0 for g in self.gains):
            raise ValueError("channel gains must be nonnegative")
        if self.scheme not in ("RSMA", "SDMA"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.quality not in QUALITY_TABLE:
            raise ValueError(f"unknown quality tier {self.quality!r}")
        if self.bandwidth_hz <= 0 or self.frame_bits <= 0 or self.cpu_hz <= 0:
            raise ValueError("bandwidth, frame_bits and cpu_hz must be positive")
        if self.render_cycles <= 0:
            raise ValueError("render_cycles must be positive")
        if self.episode_length < 1:
            raise ValueError("episode_length must be >= 1")

    @property
    def power_linear(self) -> float:
        return float(db_to_linear(self.power_db))

    @property
    def tier(self) -> QualityTier:
        return QUALITY_TABLE[self.quality]

    @property
    def observation_dim(self) -> int:
        K, G = self.num_users, self.num_groups
        return K + G + G * K

    @property
    def action_dim(self) -> int:
        K, G = self.num_users, self.num_groups
        return (1 + G + K) + (K + G * K) + G

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("gains", "phases", "fov_deg", "full_frame_deg"):
            out[key] = [float(v) for v in out[key]]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SystemConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown SystemConfig keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("gains", "phases", "fov_deg", "full_frame_deg"):
            if key in kwargs:
                kwargs[key] = tuple(float(v) for v in kwargs[key])
        return cls(**kwargs)
