"""Non-learning policies: uniform power allocation, myopic, random."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .env import Action, EnvState, StreamingEnv, project_action
from .rsma_phy import PowerAllocation

__all__ = [
    "UPA_GRID",
    "upa_action",
    "upa_grid_search",
    "UPAPolicy",
    "MyopicMemory",
    "mp_select",
    "mp_update",
    "MyopicPolicy",
    "RandomPolicy",
]

log = logging.getLogger(__name__)

#: Values swept for (common fraction, group fraction); CPU shares use
#: 11 values on (0, 1].
UPA_GRID = np.linspace(0.0, 1.0, 11)
UPA_CPU_GRID = np.linspace(1.0 / 11.0, 1.0, 11)


def upa_action(common_power_frac: float, group_power_frac: float, cpu_share: float,
               config: SystemConfig, membership=None) -> Action:
    """Uniform allocation described by three scalars.

    ``common_power_frac`` of the budget goes to the super common stream.
    Of the rest, ``group_power_frac`` is split equally over the (non-empty)
    group streams and the remainder equally over the private streams. Rate
    weights are uniform and every group gets ``cpu_share`` of the CPU.
    """
    K, G = config.num_users, config.num_groups
    if membership is None:
        active = np.ones(G, dtype=bool)
    else:
        active = np.asarray(membership).sum(axis=1) > 0
    rest = 1.0 - common_power_frac
    a_group = np.zeros(G)
    a_group[active] = rest * group_power_frac / active.sum()
    a_priv = np.full(K, rest * (1.0 - group_power_frac) / K)
    return Action(
        PowerAllocation(float(common_power_frac), a_group, a_priv),
        np.ones(K),
        np.ones((G, K)),
        np.full(G, float(cpu_share)),
    )


def upa_grid_search(env: StreamingEnv, num_states: int = 16, seed=0):
    """Pick the UPA triple with the best mean reward on calibration states.

    Calibration states come from a separate episode of ``env`` reset with
    ``seed``. Ties keep the first triple in grid order.
    """
    env.reset(seed)
    states = [env.state]
    zero = np.zeros(env.action_dim)
    while len(states) < num_states:
        tr = env.step(zero)
        states.append(tr.next_state)
        if tr.done:
            env.reset()
            states.append(env.state)
    states = states[:num_states]
    best, best_score = None, -np.inf
    for c, g, f in itertools.product(UPA_GRID, UPA_GRID, UPA_CPU_GRID):
        score = np.mean([
            env.evaluate(s, upa_action(c, g, f, env.config, s.membership)).reward
            for s in states
        ])
        if score > best_score:
            best, best_score = (float(c), float(g), float(f)), score
    log.info("UPA grid %d^3 -> best triple %s (mean calibration reward %.6g)",
             len(UPA_GRID), best, best_score)
    return best


class UPAPolicy:
    def __init__(self, config: SystemConfig, triple):
        self.config = config
        self.triple = tuple(triple)

    def act(self, state: EnvState) -> np.ndarray:
        return upa_action(*self.triple, self.config, state.membership).to_vector()


@dataclass
class MyopicMemory:
    best_reward: float
    best_action: np.ndarray
    last_reward: float
    last_action: np.ndarray


def _random_action(rng, dim):
    return rng.random(dim)


def mp_select(memory: MyopicMemory | None, rng: np.random.Generator, action_dim: int):
    """Repeat the last action unless it fell short of the best reward seen."""
    if memory is None or memory.last_reward < memory.best_reward:
        return _random_action(rng, action_dim)
    return memory.last_action.copy()


def mp_update(memory: MyopicMemory | None, action, reward: float) -> MyopicMemory:
    action = np.asarray(action, dtype=float).copy()
    if memory is None:
        return MyopicMemory(reward, action, reward, action)
    if reward > memory.best_reward:
        memory.best_reward, memory.best_action = reward, action
    memory.last_reward, memory.last_action = reward, action
    return memory


class MyopicPolicy:
    """Stateful myopic baseline; feed rewards back with :meth:`observe`."""

    def __init__(self, action_dim: int, rng: np.random.Generator):
        self.action_dim = action_dim
        self.rng = rng
        self.memory: MyopicMemory | None = None

    def act(self, state=None) -> np.ndarray:
        return mp_select(self.memory, self.rng, self.action_dim)

    def observe(self, action, reward: float) -> None:
        self.memory = mp_update(self.memory, action, reward)


class RandomPolicy:
    def __init__(self, action_dim: int, rng: np.random.Generator):
        self.action_dim = action_dim
        self.rng = rng

    def act(self, state=None) -> np.ndarray:
        return _random_action(self.rng, self.action_dim)


def is_projection_fixed_point(action: Action, membership, scheme="RSMA") -> bool:
    proj = project_action(action, membership, scheme)
    return bool(np.array_equal(proj.to_vector(), action.to_vector()))
