"""PPO learner built on small numpy networks."""

from .algorithm import (
    Adam,
    GaussianActor,
    PolicyOutput,
    PPOConfig,
    TrainResult,
    TrajectoryBatch,
    abnormal_mask,
    actor_forward,
    clip_bound,
    compute_advantages,
    compute_returns,
    critic_forward,
    gaussian_log_prob,
    logistic,
    objective_and_grads,
    sanitize_batch,
    surrogate_objective,
    train,
    update,
)
from .network import MLP

__all__ = [
    "Adam", "GaussianActor", "MLP", "PolicyOutput", "PPOConfig", "TrainResult",
    "TrajectoryBatch", "abnormal_mask", "actor_forward", "clip_bound",
    "compute_advantages", "compute_returns", "critic_forward", "gaussian_log_prob",
    "logistic", "objective_and_grads", "sanitize_batch", "surrogate_objective",
    "train", "update",
]
