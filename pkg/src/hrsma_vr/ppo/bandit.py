"""One-dimensional continuous bandit with a known optimum."""

from __future__ import annotations

import numpy as np

__all__ = ["BanditEnv"]


class BanditEnv:
    """Stateless task with reward ``1 - (a - optimum)**2`` for a in (0, 1).

    Exposes the same surface as the streaming environment so it can be fed
    to :func:`hrsma_vr.ppo.train`; the observation is a constant zero.
    """

    observation_dim = 1
    action_dim = 1

    def __init__(self, optimum: float = 0.7, episode_length: int = 50, seed=None):
        if not 0.0 < optimum < 1.0:
            raise ValueError("optimum must lie in (0, 1)")
        self.optimum = float(optimum)
        self.episode_length = int(episode_length)
        self._t = 0
        self.state = 0

    def reward(self, action) -> float:
        a = float(np.asarray(action, dtype=float).reshape(-1)[0])
        return 1.0 - (a - self.optimum) ** 2

    def observe(self, state=None) -> np.ndarray:
        return np.zeros(1)

    def reset(self, seed=None):
        self._t = 0
        return 0

    def step(self, action):
        r = self.reward(action)
        self._t += 1
        return _BanditStep(r, self._t >= self.episode_length)


class _BanditStep:
    __slots__ = ("reward", "done", "next_state")

    def __init__(self, reward, done):
        self.reward = reward
        self.done = done
        self.next_state = 0
