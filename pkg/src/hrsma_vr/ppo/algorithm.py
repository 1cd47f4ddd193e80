"""Actor-critic PPO with a clipped surrogate, written against plain numpy.

The actor outputs the mean of a diagonal Gaussian over pre-squash actions;
a state-independent log standard deviation is learned alongside. Sampled
actions are squashed into (0, 1) with the logistic function. Because the
squash does not depend on the parameters, probability ratios are computed
from the Gaussian densities of the pre-squash samples.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .network import MLP

__all__ = [
    "PPOConfig",
    "GaussianActor",
    "PolicyOutput",
    "TrajectoryBatch",
    "Adam",
    "logistic",
    "actor_forward",
    "critic_forward",
    "gaussian_log_prob",
    "compute_returns",
    "compute_advantages",
    "clip_bound",
    "surrogate_objective",
    "objective_and_grads",
    "abnormal_mask",
    "sanitize_batch",
    "update",
    "TrainResult",
    "train",
]

log = logging.getLogger(__name__)
LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class PPOConfig:
    clip_eps: float = 0.2
    actor_lr: float = 3e-4
    critic_lr: float = 1e-3
    epochs: int = 4
    minibatch_size: int = 32
    gamma: float = 1.0
    normalize_advantages: bool = True
    literal_return: bool = False
    hidden: tuple = (64, 64)
    init_log_std: float = -0.5
    max_grad_norm: float = 0.5
    reward_scale: float = 1.0
    total_steps: int = 10_000

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "PPOConfig":
        data = dict(data)
        if "hidden" in data:
            data["hidden"] = tuple(int(h) for h in data["hidden"])
        return cls(**data)


def logistic(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class GaussianActor:
    """Mean network plus a free log-std vector; flat layout ``[net, log_std]``."""

    def __init__(self, net: MLP, log_std):
        self.net = net
        self.log_std = np.asarray(log_std, dtype=np.float64).copy()
        if self.log_std.shape != (net.sizes[-1],):
            raise ValueError("log_std length must equal the action dimension")

    @classmethod
    def initialized(cls, obs_dim, act_dim, hidden, rng, init_log_std=-0.5):
        net = MLP.initialized((obs_dim, *hidden, act_dim), rng)
        return cls(net, np.full(act_dim, init_log_std))

    @property
    def sizes(self):
        return self.net.sizes

    @property
    def num_params(self):
        return self.net.num_params + self.log_std.size

    def get_flat(self) -> np.ndarray:
        return np.concatenate((self.net.params, self.log_std))

    def set_flat(self, flat) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        n = self.net.num_params
        self.net.params[...] = flat[:n]
        self.log_std[...] = flat[n:]

    def copy(self) -> "GaussianActor":
        return GaussianActor(MLP(self.net.sizes, self.net.params), self.log_std)


@dataclass
class PolicyOutput:
    mean: np.ndarray
    log_std: np.ndarray
    pre_squash: np.ndarray
    action: np.ndarray
    log_prob: float


def gaussian_log_prob(u, mean, log_std):
    """Log density of diagonal Gaussian samples; sums the last axis."""
    z = (u - mean) * np.exp(-log_std)
    return np.sum(-0.5 * z**2 - log_std - 0.5 * LOG_2PI, axis=-1)


def actor_forward(actor: GaussianActor, observation, rng: np.random.Generator | None = None):
    """Policy at one observation.

    With ``rng`` the action is sampled; without it the mean is used.
    """
    mean = actor.net.forward(observation)
    if rng is None:
        u = mean.copy()
    else:
        u = mean + np.exp(actor.log_std) * rng.standard_normal(mean.shape)
    return PolicyOutput(
        mean=mean,
        log_std=actor.log_std.copy(),
        pre_squash=u,
        action=logistic(u),
        log_prob=float(gaussian_log_prob(u, mean, actor.log_std)),
    )


def critic_forward(critic: MLP, observation):
    out = critic.forward(observation)
    return float(out[0]) if out.ndim == 1 else out[:, 0]


# -- returns, advantages, surrogate ------------------------------------------

def compute_returns(rewards, dones, gamma: float = 1.0, literal: bool = False) -> np.ndarray:
    """Return-to-go within each episode; ``dones`` marks episode ends.

    With ``literal`` every step of an episode gets the whole-episode sum.
    """
    rewards = np.asarray(rewards, dtype=float)
    dones = np.asarray(dones, dtype=bool)
    out = np.empty_like(rewards)
    running = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        if dones[t]:
            running = 0.0
        running = rewards[t] + gamma * running
        out[t] = running
    if literal:
        start = 0
        for t in range(len(rewards)):
            if dones[t] or t == len(rewards) - 1:
                out[start : t + 1] = rewards[start : t + 1].sum()
                start = t + 1
    return out


def compute_advantages(returns, values, normalize: bool = True) -> np.ndarray:
    adv = np.asarray(returns, dtype=float) - np.asarray(values, dtype=float)
    if normalize and adv.size > 1:
        std = adv.std()
        adv = (adv - adv.mean()) / (std if std > 1e-12 else 1.0)
    return adv


def clip_bound(epsilon, advantage):
    """``(1 + eps) * A`` for nonnegative advantages, ``(1 - eps) * A`` otherwise."""
    advantage = np.asarray(advantage, dtype=float)
    out = np.where(advantage >= 0, (1.0 + epsilon) * advantage, (1.0 - epsilon) * advantage)
    return out if out.ndim else float(out)


def surrogate_objective(ratio, epsilon, advantage):
    out = np.minimum(np.asarray(ratio, dtype=float) * advantage, clip_bound(epsilon, advantage))
    return out if np.ndim(out) else float(out)


@dataclass
class TrajectoryBatch:
    observations: np.ndarray
    pre_squash: np.ndarray
    old_log_probs: np.ndarray
    rewards: np.ndarray
    dones: np.ndarray
    returns: np.ndarray | None = None
    advantages: np.ndarray | None = None

    def __len__(self):
        return len(self.rewards)

    def subset(self, idx) -> "TrajectoryBatch":
        pick = lambda a: None if a is None else a[idx]  # noqa: E731
        return TrajectoryBatch(
            self.observations[idx], self.pre_squash[idx], self.old_log_probs[idx],
            self.rewards[idx], self.dones[idx], pick(self.returns), pick(self.advantages),
        )


def objective_and_grads(actor: GaussianActor, critic: MLP, batch: TrajectoryBatch,
                        epsilon: float):
    """Batch-mean surrogate and value loss with their exact gradients.

    Returns ``(surrogate, value_loss, grad_actor_flat, grad_critic_flat,
    diagnostics)``.
    """
    N = len(batch)
    mean, acts = actor.net.forward(batch.observations, cache=True)
    log_std = actor.log_std
    inv_var = np.exp(-2.0 * log_std)
    diff = batch.pre_squash - mean
    logp = gaussian_log_prob(batch.pre_squash, mean, log_std)
    ratio = np.exp(logp - batch.old_log_probs)
    A = batch.advantages
    unclipped = ratio * A
    bound = clip_bound(epsilon, A)
    per_step = np.minimum(unclipped, bound)
    surrogate = float(per_step.mean())

    # written as a negation so a NaN sample stays active and poisons the gradient
    active = ~(unclipped > bound)
    coef = np.where(active, A * ratio, 0.0) / N
    g_mean = coef[:, None] * diff * inv_var
    g_net = actor.net.backward(acts, g_mean)
    g_log_std = np.sum(coef[:, None] * (diff**2 * inv_var - 1.0), axis=0)
    g_actor = np.concatenate((g_net, g_log_std))

    values, c_acts = critic.forward(batch.observations, cache=True)
    err = values[:, 0] - batch.returns
    value_loss = float(np.mean(err**2))
    g_critic = critic.backward(c_acts, (2.0 / N) * err[:, None])

    diag = {
        "mean_ratio": float(ratio.mean()),
        "clip_fraction": float(np.mean(~active)),
        "value_loss": value_loss,
        "surrogate": surrogate,
    }
    return surrogate, value_loss, g_actor, g_critic, diag


class Adam:
    def __init__(self, size: int, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, grad) -> np.ndarray:
        """Descent direction scaled by the learning rate (to be subtracted)."""
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _clip_norm(g, max_norm):
    if max_norm is None or max_norm <= 0:
        return g
    n = np.linalg.norm(g)
    return g * (max_norm / n) if n > max_norm else g


# -- data hygiene -------------------------------------------------------------

def abnormal_mask(observations, rewards, cpu_slice: slice | None = None) -> np.ndarray:
    """True for rows with non-finite data or CPU fractions outside (0, 1]."""
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    rewards = np.asarray(rewards, dtype=float)
    bad = ~np.all(np.isfinite(obs), axis=1) | ~np.isfinite(rewards)
    if cpu_slice is not None:
        cpu = obs[:, cpu_slice]
        with np.errstate(invalid="ignore"):
            bad |= np.any((cpu > 1.0) | (cpu <= 0.0), axis=1)
    return bad


def sanitize_batch(transitions):
    """Drop environment transitions with abnormal observations or rewards.

    Returns ``(clean_transitions, dropped_count)``.
    """
    keep = []
    for tr in transitions:
        s = tr.state
        obs = np.concatenate((s.channel_rms, s.available_cpu))
        K = len(s.channel_rms)
        if not abnormal_mask(obs[None, :], [tr.reward], slice(K, None))[0]:
            keep.append(tr)
    dropped = len(transitions) - len(keep)
    if dropped:
        log.info("sanitize_batch dropped %d of %d transitions", dropped, len(transitions))
    return keep, dropped


# -- update and training loop -------------------------------------------------

def update(actor: GaussianActor, critic: MLP, batch: TrajectoryBatch, hyper: PPOConfig,
           actor_opt: Adam, critic_opt: Adam, rng: np.random.Generator):
    """Run the configured epochs of minibatch PPO on ``batch`` in place.

    On a non-finite gradient the whole update is abandoned and the
    parameters are restored.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    saved_actor, saved_critic = actor.get_flat(), critic.params.copy()
    saved_opts = [(o.m.copy(), o.v.copy(), o.t) for o in (actor_opt, critic_opt)]
    N = len(batch)
    mb = max(1, min(hyper.minibatch_size, N))
    diags = []
    for _ in range(hyper.epochs):
        order = rng.permutation(N)
        for start in range(0, N, mb):
            sub = batch.subset(order[start : start + mb])
            _, _, g_a, g_c, diag = objective_and_grads(actor, critic, sub, hyper.clip_eps)
            if not (np.all(np.isfinite(g_a)) and np.all(np.isfinite(g_c))):
                actor.set_flat(saved_actor)
                critic.params[...] = saved_critic
                for o, (m, v, t) in zip((actor_opt, critic_opt), saved_opts):
                    o.m, o.v, o.t = m, v, t
                log.warning("non-finite gradient; update discarded")
                return {"aborted": True, "reason": "non-finite gradient"}
            # ascent on the surrogate, descent on the value loss
            actor.set_flat(actor.get_flat() + actor_opt.step(_clip_norm(g_a, hyper.max_grad_norm)))
            critic.params -= critic_opt.step(_clip_norm(g_c, hyper.max_grad_norm))
            diags.append(diag)
    return {
        "aborted": False,
        "mean_ratio": float(np.mean([d["mean_ratio"] for d in diags])),
        "clip_fraction": float(np.mean([d["clip_fraction"] for d in diags])),
        "value_loss": float(np.mean([d["value_loss"] for d in diags])),
    }


@dataclass
class TrainResult:
    actor: GaussianActor
    critic: MLP
    reward_curve: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    steps: int = 0
    dropped: int = 0


def _collect_episode(env, actor, rng, max_steps):
    state = env.reset()
    obs, us, logps, rewards, dones = [], [], [], [], []
    while len(rewards) < max_steps:
        o = env.observe(state)
        out = actor_forward(actor, o, rng)
        tr = env.step(out.action)
        obs.append(o)
        us.append(out.pre_squash)
        logps.append(out.log_prob)
        rewards.append(tr.reward)
        dones.append(tr.done)
        state = tr.next_state
        if tr.done:
            break
    dones[-1] = True
    return (np.asarray(obs), np.asarray(us), np.asarray(logps),
            np.asarray(rewards, dtype=float), np.asarray(dones))


def train(env_factory, hyper: PPOConfig | None = None, seed=0) -> TrainResult:
    """Collect one episode per iteration, then update actor and critic.

    ``env_factory(seed)`` must return an environment exposing ``reset()``,
    ``step(action)``, ``observe(state)``, ``observation_dim``,
    ``action_dim`` and ``episode_length``. Randomness derives from ``seed``
    through independent streams for the environment, initialization,
    action sampling and minibatch shuffling.
    """
    hyper = hyper or PPOConfig()
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    env_ss, init_ss, sample_ss, shuffle_ss = root.spawn(4)
    env = env_factory(env_ss)
    init_rng = np.random.default_rng(init_ss)
    sample_rng = np.random.default_rng(sample_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)

    actor = GaussianActor.initialized(env.observation_dim, env.action_dim, hyper.hidden,
                                      init_rng, hyper.init_log_std)
    critic = MLP.initialized((env.observation_dim, *hyper.hidden, 1), init_rng, out_scale=1.0)
    actor_opt = Adam(actor.num_params, hyper.actor_lr)
    critic_opt = Adam(critic.num_params, hyper.critic_lr)
    cpu_slice = getattr(env, "cpu_slice", None)

    result = TrainResult(actor, critic)
    ep_len = env.episode_length
    iterations = max(1, hyper.total_steps // ep_len)
    for _ in range(iterations):
        obs, us, logps, rewards, dones = _collect_episode(env, actor, sample_rng, ep_len)
        result.steps += len(rewards)
        result.reward_curve.append(float(rewards.mean()))
        returns = compute_returns(rewards * hyper.reward_scale, dones, hyper.gamma,
                                  hyper.literal_return)
        bad = abnormal_mask(obs, rewards, cpu_slice)
        if bad.any():
            result.dropped += int(bad.sum())
            keep = ~bad
            obs, us, logps, rewards, dones, returns = (
                a[keep] for a in (obs, us, logps, rewards, dones, returns))
            if len(rewards) == 0:
                continue
        values = critic_forward(critic, obs)
        adv = compute_advantages(returns, values, hyper.normalize_advantages)
        batch = TrajectoryBatch(obs, us, logps, rewards, dones, returns, adv)
        result.diagnostics.append(update(actor, critic, batch, hyper, actor_opt, critic_opt,
                                         shuffle_rng))
    return result
