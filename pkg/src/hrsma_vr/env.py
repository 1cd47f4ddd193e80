"""Sequential decision environment for RSMA-assisted FoV streaming.

At every step the base station observes per-user channel RMS values, the
available CPU fraction of every group and the current clustering matrix,
then picks power coefficients, common-rate weights and CPU shares. The
reward is the inverse of the worst user's latency.

The FoVs reported at the end of step t only shape the clustering used at
step t + 1. Index t of the behaviour trace holds the features known at the
start of step t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelParams, sample_channel
from .clustering import (
    generate_synthetic_behaviour,
    group_frame_bits,
    kmeans_cluster,
    load_behaviour_csv,
    single_group_policy,
)
from .config import SystemConfig
from .latency import ComputeState, LatencyReport, system_latency_and_reward
from .rsma_phy import (
    POWER_SLACK,
    CommonRatePortions,
    PowerAllocation,
    RateReport,
    achievable_rates,
    assign_common_portions,
    project_power,
    sdma_rates,
    user_total_rate,
)
from .traces import generate_cpu_trace, load_cpu_trace

__all__ = [
    "CPU_SHARE_FLOOR",
    "Action",
    "EnvState",
    "Transition",
    "StreamingEnv",
    "observe",
    "unflatten_observation",
    "project_action",
]

CPU_SHARE_FLOOR = 1e-3


@dataclass(frozen=True)
class Action:
    """Decision variables: power coefficients, rate weights, CPU shares.

    Flat layout: ``[alpha_c, alpha_G (G), alpha_k (K), w_super (K),
    w_group (G*K, row-major), f (G)]``.
    """

    alpha: PowerAllocation
    weights_super: np.ndarray
    weights_group: np.ndarray
    cpu_shares: np.ndarray

    @classmethod
    def from_vector(cls, vec, num_users: int, num_groups: int) -> "Action":
        K, G = num_users, num_groups
        vec = np.asarray(vec, dtype=float)
        expected = (1 + G + K) + (K + G * K) + G
        if vec.shape != (expected,):
            raise ValueError(f"action must have {expected} entries, got shape {vec.shape}")
        i = 1 + G + K
        alpha = PowerAllocation.from_vector(vec[:i], G)
        w_super = vec[i : i + K].copy()
        w_group = vec[i + K : i + K + G * K].reshape(G, K).copy()
        f = vec[i + K + G * K :].copy()
        return cls(alpha, w_super, w_group, f)

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            (self.alpha.to_vector(), self.weights_super, self.weights_group.ravel(),
             self.cpu_shares)
        )


@dataclass(frozen=True)
class EnvState:
    channel_rms: np.ndarray
    available_cpu: np.ndarray
    membership: np.ndarray
    t: int


@dataclass
class Transition:
    state: EnvState
    action: Action
    reward: float
    next_state: EnvState
    done: bool
    rates: RateReport | None = None
    portions: CommonRatePortions | None = None
    latency: LatencyReport | None = None
    info: dict = field(default_factory=dict)


def observe(state: EnvState) -> np.ndarray:
    """Flatten to ``[rms_1..rms_K, F_1..F_G, membership row-major]``."""
    return np.concatenate(
        (state.channel_rms, state.available_cpu, np.asarray(state.membership, float).ravel())
    )


def unflatten_observation(obs, num_users: int, num_groups: int, t: int = 0) -> EnvState:
    K, G = num_users, num_groups
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (K + G + G * K,):
        raise ValueError(f"observation must have {K + G + G * K} entries")
    member = obs[K + G :].reshape(G, K).astype(np.int64)
    return EnvState(obs[:K].copy(), obs[K : K + G].copy(), member, t)


def project_action(action: Action, membership, scheme: str = "RSMA",
                   strict_cpu_sum: bool = False) -> Action:
    """Map any [0, 1]-box action onto the feasible set.

    Power of empty groups (and of every common stream under SDMA) is
    dropped, the power vector is rescaled when it exceeds the budget, rate
    weights are clipped to [0, 1] and CPU shares to [floor, 1]. Feasible
    actions are returned unchanged.
    """
    membership = np.asarray(membership)
    G, K = membership.shape
    vec = action.to_vector()
    if np.any(np.isnan(vec)):
        raise ValueError("action contains NaN")
    alpha = np.clip(action.alpha.to_vector(), 0.0, 1.0)
    empty = membership.sum(axis=1) == 0
    alpha[1 : 1 + G][empty] = 0.0
    if scheme == "SDMA":
        alpha[: 1 + G] = 0.0
    alpha = project_power(alpha)
    f = np.clip(action.cpu_shares, CPU_SHARE_FLOOR, 1.0)
    if strict_cpu_sum and f.sum() > 1.0 + POWER_SLACK:
        f = np.maximum(f / f.sum(), CPU_SHARE_FLOOR)
    return Action(
        PowerAllocation.from_vector(alpha, G),
        np.clip(action.weights_super, 0.0, 1.0),
        np.clip(action.weights_group, 0.0, 1.0),
        f,
    )


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class StreamingEnv:
    """Episodic environment; one instance owns its state and random streams.

    Parameters
    ----------
    config : SystemConfig
    seed : int, optional
        Root seed. ``reset()`` without a seed advances to the next
        independent episode stream; ``reset(seed)`` restarts from ``seed``.
    cpu_trace, behaviour : ndarray, optional
        Fixed traces used for every episode instead of the synthetic
        generators (or the CSV paths in ``config``).
    """

    def __init__(self, config: SystemConfig | None = None, seed=None,
                 cpu_trace=None, behaviour=None):
        self.config = config if config is not None else SystemConfig()
        cfg = self.config
        if cpu_trace is None and cfg.cpu_trace_path:
            cpu_trace = load_cpu_trace(cfg.cpu_trace_path)
        if behaviour is None and cfg.behaviour_trace_path:
            behaviour = load_behaviour_csv(cfg.behaviour_trace_path)
        self._fixed_cpu = None if cpu_trace is None else np.asarray(cpu_trace, float)
        self._fixed_behaviour = None if behaviour is None else np.asarray(behaviour, float)
        for name, trace in (("CPU", self._fixed_cpu), ("behaviour", self._fixed_behaviour)):
            if trace is not None and trace.shape[0] < cfg.episode_length:
                raise ValueError(
                    f"{name} trace has {trace.shape[0]} steps, episode needs {cfg.episode_length}"
                )
        if self._fixed_cpu is not None and self._fixed_cpu.shape[1] != cfg.num_groups:
            raise ValueError("CPU trace column count must equal num_groups")
        if self._fixed_behaviour is not None and self._fixed_behaviour.shape[1] != cfg.num_users:
            raise ValueError("behaviour trace user count must equal num_users")

        self.num_users = cfg.num_users
        self.num_groups = cfg.num_groups
        self.episode_length = cfg.episode_length
        self.observation_dim = cfg.observation_dim
        self.action_dim = cfg.action_dim
        self._channel = ChannelParams(
            num_antennas=cfg.num_antennas,
            gain=np.asarray(cfg.gains, float),
            phase=np.asarray(cfg.phases, float),
            dof=np.full(cfg.num_users, cfg.dof),
            power_linear=cfg.power_linear,
        )
        base_bits = cfg.frame_bits * cfg.tier.bits_multiplier
        self.frame_bits = group_frame_bits(base_bits, cfg.clustering_enabled,
                                           cfg.fov_deg, cfg.full_frame_deg)
        self._root = _seed_sequence(seed)
        self.state: EnvState | None = None
        self.cpu_slice = slice(cfg.num_users, cfg.num_users + cfg.num_groups)

    def observe(self, state: EnvState | None = None) -> np.ndarray:
        return observe(self.state if state is None else state)

    # -- episode bookkeeping ------------------------------------------------
    def reset(self, seed=None) -> EnvState:
        cfg = self.config
        if seed is not None:
            self._root = _seed_sequence(seed)
        ep = self._root.spawn(1)[0]
        ch_ss, cpu_ss, beh_ss, km_ss = ep.spawn(4)
        self._rng_channel = np.random.default_rng(ch_ss)
        self._kmeans_seed = int(km_ss.generate_state(1)[0])
        n = cfg.episode_length + 1
        if self._fixed_cpu is not None:
            self._cpu = self._fixed_cpu
        else:
            self._cpu = generate_cpu_trace(cfg.quality, n, cfg.num_groups,
                                           seed=cpu_ss, noise_std=cfg.cpu_noise_std)
        if self._fixed_behaviour is not None:
            self._behaviour = self._fixed_behaviour
        elif cfg.clustering_enabled:
            self._behaviour = generate_synthetic_behaviour(
                cfg.num_users, n, cfg.num_attractors, seed=beh_ss,
                noise_deg=cfg.behaviour_noise_deg, switch_prob=cfg.behaviour_switch_prob,
                step_seconds=cfg.step_seconds,
            )
        else:
            self._behaviour = None
        self.state = self._make_state(0)
        return self.state

    def _membership(self, t: int) -> np.ndarray:
        cfg = self.config
        if not cfg.clustering_enabled:
            return single_group_policy(cfg.num_users, cfg.num_groups)
        feats = self._behaviour[min(t, len(self._behaviour) - 1)]
        return kmeans_cluster(feats, cfg.num_groups, seed=self._kmeans_seed)

    def _make_state(self, t: int) -> EnvState:
        real = sample_channel(self._channel, self._rng_channel)
        cpu = self._cpu[min(t, len(self._cpu) - 1)].copy()
        return EnvState(real.rms, cpu, self._membership(t), t)

    # -- dynamics -------------------------------------------------------------
    def evaluate(self, state: EnvState, action) -> Transition:
        """Reward of ``action`` in ``state`` without advancing the episode."""
        cfg = self.config
        if not isinstance(action, Action):
            action = Action.from_vector(action, cfg.num_users, cfg.num_groups)
        act = project_action(action, state.membership, cfg.scheme, cfg.strict_cpu_sum)
        sq = cfg.num_antennas * state.channel_rms**2
        P0 = cfg.power_linear
        if cfg.scheme == "SDMA":
            rates = sdma_rates(sq, P0, act.alpha.alpha_private)
            report = RateReport(
                gamma_super=np.zeros(cfg.num_users), gamma_group=np.zeros(cfg.num_users),
                gamma_private=2.0**rates - 1.0, r_private=rates,
                r_group=np.zeros(cfg.num_groups), r_super=0.0,
                r_user_total=rates, sum_rate=float(rates.sum()),
            )
            portions = None
        else:
            report = achievable_rates(sq, P0, act.alpha, state.membership,
                                      literal_group_min=cfg.literal_group_min)
            portions = assign_common_portions(act.weights_super, act.weights_group,
                                              report, state.membership)
            rates = user_total_rate(report, portions, state.membership)
        compute = ComputeState(cfg.cpu_hz, state.available_cpu, act.cpu_shares,
                               cfg.render_cycles)
        lat = system_latency_and_reward(rates, compute, state.membership,
                                        self.frame_bits, cfg.bandwidth_hz)
        return Transition(state, act, lat.reward, state, False, report, portions, lat)

    def step(self, action) -> Transition:
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        state = self.state
        if state.t >= self.episode_length:
            raise RuntimeError("episode is over; call reset()")
        tr = self.evaluate(state, action)
        t_next = state.t + 1
        tr.next_state = self._make_state(t_next)
        tr.done = t_next == self.episode_length
        self.state = tr.next_state
        return tr
