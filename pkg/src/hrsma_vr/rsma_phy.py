"""Hierarchical rate-splitting physical layer.

Three stream layers are decoded in order by every user k of group g:
the super common stream (shared by all users), the group common stream of
group g, and the private stream of user k. SIC is assumed perfect, so a
decoded layer no longer interferes with the next one. Receiver noise power
is normalized to one.

All SINRs use the scalar channel power ``|h_k|^2`` (squared Euclidean norm
of the antenna vector); no precoder is modelled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PowerAllocation",
    "CommonRatePortions",
    "RateReport",
    "group_index",
    "project_power",
    "sinr_super_common",
    "sinr_group_common",
    "sinr_private",
    "achievable_rates",
    "assign_common_portions",
    "user_total_rate",
    "sdma_rates",
]

# Slack on the power budget before renormalizing; keeps projection idempotent.
POWER_SLACK = 1e-12


@dataclass(frozen=True)
class PowerAllocation:
    alpha_c: float
    alpha_group: np.ndarray
    alpha_private: np.ndarray

    @classmethod
    def from_vector(cls, alpha, num_groups: int) -> "PowerAllocation":
        alpha = np.asarray(alpha, dtype=float)
        return cls(
            alpha_c=float(alpha[0]),
            alpha_group=alpha[1 : 1 + num_groups].copy(),
            alpha_private=alpha[1 + num_groups :].copy(),
        )

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.alpha_c], self.alpha_group, self.alpha_private))

    @property
    def total(self) -> float:
        return float(self.alpha_c + np.sum(self.alpha_group) + np.sum(self.alpha_private))


@dataclass(frozen=True)
class CommonRatePortions:
    """Per-user shares of the common rates (bits/s/Hz).

    ``super_portions`` has shape (K,), ``group_portions`` shape (G, K).
    """

    super_portions: np.ndarray
    group_portions: np.ndarray


@dataclass
class RateReport:
    gamma_super: np.ndarray
    gamma_group: np.ndarray
    gamma_private: np.ndarray
    r_private: np.ndarray
    r_group: np.ndarray
    r_super: float
    r_user_total: np.ndarray | None = None
    sum_rate: float | None = None


def group_index(membership) -> np.ndarray:
    """Group index of every user from a G x K binary membership matrix."""
    membership = np.asarray(membership)
    return np.argmax(membership, axis=0)


def project_power(alpha) -> np.ndarray:
    """Clip to [0, 1] and rescale onto the power budget if it is exceeded."""
    alpha = np.clip(np.asarray(alpha, dtype=float), 0.0, 1.0)
    total = alpha.sum()
    if total > 1.0 + POWER_SLACK:
        alpha = alpha / total
    return alpha


def sinr_super_common(sq_norm, P0, alloc: PowerAllocation):
    s = np.asarray(sq_norm, dtype=float) * P0
    interference = s * np.sum(alloc.alpha_group) + s * np.sum(alloc.alpha_private)
    return s * alloc.alpha_c / (interference + 1.0)


def sinr_group_common(sq_norm, P0, alloc: PowerAllocation, own_group):
    s = np.asarray(sq_norm, dtype=float) * P0
    a_g = np.asarray(alloc.alpha_group, dtype=float)
    own = a_g[own_group]
    other_groups = np.sum(a_g) - own
    interference = s * other_groups + s * np.sum(alloc.alpha_private)
    return s * own / (interference + 1.0)


def sinr_private(sq_norm, P0, alloc: PowerAllocation, own_group, own_user):
    s = np.asarray(sq_norm, dtype=float) * P0
    a_g = np.asarray(alloc.alpha_group, dtype=float)
    a_p = np.asarray(alloc.alpha_private, dtype=float)
    other_groups = np.sum(a_g) - a_g[own_group]
    own = a_p[own_user]
    other_users = np.sum(a_p) - own
    return s * own / (s * other_groups + s * other_users + 1.0)


def achievable_rates(
    sq_norms, P0, alloc: PowerAllocation, membership, literal_group_min: bool = False
) -> RateReport:
    """SINRs and decodable rates of every stream (portions not yet assigned).

    A group stream's rate is the minimum over its member users. With
    ``literal_group_min`` the minimum is taken jointly over all users and
    all groups, which gives every group the same rate.
    """
    sq_norms = np.asarray(sq_norms, dtype=float)
    membership = np.asarray(membership)
    G, K = membership.shape
    if sq_norms.shape != (K,):
        raise ValueError(f"expected {K} channel powers, got shape {sq_norms.shape}")
    sizes = membership.sum(axis=1)
    a_g = np.asarray(alloc.alpha_group, dtype=float)
    if np.any((sizes == 0) & (a_g > 0)):
        empty = np.flatnonzero((sizes == 0) & (a_g > 0)).tolist()
        raise ValueError(f"power allocated to empty group(s) {empty}: stream is undecodable")

    groups = group_index(membership)
    users = np.arange(K)
    g_c = sinr_super_common(sq_norms, P0, alloc)
    g_g = sinr_group_common(sq_norms, P0, alloc, groups)
    g_p = sinr_private(sq_norms, P0, alloc, groups, users)
    r_p = np.log2(1.0 + g_p)
    r_c = float(np.min(np.log2(1.0 + g_c)))

    if literal_group_min:
        # gamma for every (user, group) pair, not only the user's own group
        all_pairs = sinr_group_common(sq_norms[None, :], P0, alloc, np.arange(G)[:, None])
        r_group = np.full(G, float(np.min(np.log2(1.0 + all_pairs))))
    else:
        per_user = np.log2(1.0 + g_g)
        r_group = np.zeros(G)
        for g in range(G):
            if sizes[g] > 0:
                r_group[g] = np.min(per_user[groups == g])
    return RateReport(
        gamma_super=g_c,
        gamma_group=g_g,
        gamma_private=g_p,
        r_private=r_p,
        r_group=r_group,
        r_super=r_c,
    )


def _split_exact(total: float, weights) -> np.ndarray:
    """Split ``total`` proportionally to ``weights`` with an exact sum.

    All portions but the largest are rounded down to multiples of
    ``ulp(total)`` and the largest takes the remainder. Every partial sum
    is then a representable multiple of that ulp, so the portions add up
    to ``total`` exactly in any summation order.
    """
    weights = np.asarray(weights, dtype=float)
    wsum = weights.sum()
    if wsum <= 0:
        weights = np.ones_like(weights)
        wsum = weights.sum()
    out = total * (weights / wsum)
    if total <= 0:
        return out
    u = np.spacing(total)
    top = int(np.argmax(out))
    out = np.floor(out / u) * u
    out[top] = 0.0
    out[top] = total - out.sum()
    return out


def assign_common_portions(
    raw_weights_super, raw_weights_group, report: RateReport, membership
) -> CommonRatePortions:
    """Project agent weights onto the common-rate equality constraints.

    Super common portions sum to ``R_c``; the portions of group g sum to
    ``R_{G_g}`` and are nonzero only for members of g. All-zero weights
    fall back to a uniform split.
    """
    membership = np.asarray(membership)
    G, K = membership.shape
    w_super = np.asarray(raw_weights_super, dtype=float)
    w_group = np.asarray(raw_weights_group, dtype=float).reshape(G, K)
    if np.any(~np.isfinite(w_super)) or np.any(~np.isfinite(w_group)):
        raise ValueError("portion weights must be finite")
    w_super = np.maximum(w_super, 0.0)
    w_group = np.maximum(w_group, 0.0)

    super_portions = _split_exact(report.r_super, w_super)
    group_portions = np.zeros((G, K))
    for g in range(G):
        members = membership[g] == 1
        if members.any():
            group_portions[g, members] = _split_exact(report.r_group[g], w_group[g, members])
    return CommonRatePortions(super_portions, group_portions)


def user_total_rate(report: RateReport, portions: CommonRatePortions, membership) -> np.ndarray:
    """Per-user rate: private rate plus own group share plus super share."""
    membership = np.asarray(membership)
    groups = group_index(membership)
    own_group = portions.group_portions[groups, np.arange(membership.shape[1])]
    total = report.r_private + own_group + portions.super_portions
    report.r_user_total = total
    report.sum_rate = float(np.sum(total))
    return total


def sdma_rates(sq_norms, P0, alpha_private) -> np.ndarray:
    """Per-user rates when every other stream is treated as noise."""
    s = np.asarray(sq_norms, dtype=float) * P0
    a = np.asarray(alpha_private, dtype=float)
    others = np.sum(a) - a
    return np.log2(1.0 + s * a / (s * others + 1.0))
