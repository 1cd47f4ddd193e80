"""FoV-based user grouping.

Users are grouped with a deterministic K-means on per-user viewing
features. The synthetic behaviour generator stands in for a head-movement
dataset: each user wanders around one of several angular attractors and
occasionally switches to another one.

Feature columns of the synthetic traces:

0. yaw of the viewing centre (deg, wrapped to [-180, 180))
1. pitch of the viewing centre (deg, clipped to [-90, 90])
2. head speed (deg/s)
3. explored-area fraction in [0, 1]
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = [
    "FEATURE_NAMES",
    "validate_membership",
    "kmeans_cluster",
    "wcss",
    "single_group_policy",
    "group_frame_bits",
    "generate_synthetic_behaviour",
    "save_behaviour_csv",
    "load_behaviour_csv",
]

FEATURE_NAMES = ("yaw_deg", "pitch_deg", "speed_deg_s", "area_frac")
MAX_ITER = 100


def validate_membership(membership, require_nonempty: bool = True) -> np.ndarray:
    """Check the clustering-policy invariants and return the matrix."""
    membership = np.asarray(membership)
    if membership.ndim != 2:
        raise ValueError("membership must be a G x K matrix")
    if not np.isin(membership, (0, 1)).all():
        raise ValueError("membership entries must be 0 or 1")
    if not (membership.sum(axis=0) == 1).all():
        raise ValueError("every user must belong to exactly one group")
    G, K = membership.shape
    if require_nonempty and K >= G and (membership.sum(axis=1) == 0).any():
        raise ValueError("empty group")
    return membership


def _to_membership(labels, G):
    K = len(labels)
    out = np.zeros((G, K), dtype=np.int64)
    out[labels, np.arange(K)] = 1
    return out


def _sq_dist(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=-1)


def wcss(features, labels) -> float:
    """Within-cluster sum of squares of a labelling."""
    X = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    total = 0.0
    for g in np.unique(labels):
        pts = X[labels == g]
        total += float(((pts - pts.mean(axis=0)) ** 2).sum())
    return total


def _farthest_point_init(X, G, rng):
    K = X.shape[0]
    chosen = [int(rng.integers(K))]
    d = _sq_dist(X, X[chosen[0]][None, :])[:, 0]
    while len(chosen) < G:
        d_masked = d.copy()
        d_masked[chosen] = -1.0
        nxt = int(np.argmax(d_masked))  # ties -> lowest index
        chosen.append(nxt)
        d = np.minimum(d, _sq_dist(X, X[nxt][None, :])[:, 0])
    return X[chosen].copy()


def _repair_empty(X, labels, centroids, G):
    """Give every empty cluster the point farthest from its own centroid."""
    labels = labels.copy()
    for g in range(G):
        if np.any(labels == g):
            continue
        counts = np.bincount(labels, minlength=G)
        donors = counts[labels] > 1
        d = ((X - centroids[labels]) ** 2).sum(axis=1)
        d[~donors] = -1.0
        idx = int(np.argmax(d))
        labels[idx] = g
        centroids[g] = X[idx]
    return labels


def _canonical_labels(labels, G):
    """Relabel groups in order of their lowest-index member."""
    order = []
    for lab in labels:
        if lab not in order:
            order.append(int(lab))
    order += [g for g in range(G) if g not in order]
    remap = np.empty(G, dtype=np.int64)
    remap[order] = np.arange(G)
    return remap[labels]


def kmeans_cluster(features, G: int, seed=0, return_history: bool = False):
    """Group K users into G clusters; returns the G x K membership matrix.

    Lloyd iterations from a seeded farthest-point initialization. Ties in
    the nearest-centroid step go to the lowest group index, empty clusters
    are repaired, and groups are finally renumbered by their lowest-index
    member so the output does not depend on arbitrary label order.

    With ``return_history=True`` also returns the within-cluster sum of
    squares after every iteration.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("features must be a non-empty K x d matrix")
    if G < 1:
        raise ValueError("G must be >= 1")
    if not np.all(np.isfinite(X)):
        raise ValueError("features must be finite")
    K = X.shape[0]
    rng = np.random.default_rng(seed)

    if K <= G:
        labels = np.arange(K)
        member = _to_membership(labels, G)
        return (member, [0.0]) if return_history else member

    centroids = _farthest_point_init(X, G, rng)
    labels = np.argmin(_sq_dist(X, centroids), axis=1)
    labels = _repair_empty(X, labels, centroids, G)
    history = [wcss(X, labels)] if return_history else None
    for _ in range(MAX_ITER):
        centroids = np.stack([X[labels == g].mean(axis=0) for g in range(G)])
        new = np.argmin(_sq_dist(X, centroids), axis=1)
        new = _repair_empty(X, new, centroids, G)
        if return_history:
            history.append(wcss(X, new))
        if np.array_equal(new, labels):
            break
        labels = new
    labels = _canonical_labels(labels, G)
    member = _to_membership(labels, G)
    return (member, history) if return_history else member


def single_group_policy(K: int, G: int) -> np.ndarray:
    """All users in the first group (clustering disabled)."""
    member = np.zeros((G, K), dtype=np.int64)
    member[0] = 1
    return member


def group_frame_bits(base_bits, clustered: bool, fov_deg=(100.0, 100.0),
                     full_deg=(360.0, 360.0)) -> float:
    """Bits per transmitted frame.

    A clustered group only needs its FoV window; without clustering the
    whole frame is sent, scaled by the area ratio.
    """
    if min(fov_deg) <= 0 or min(full_deg) <= 0 or base_bits <= 0:
        raise ValueError("dimensions and base_bits must be positive")
    if clustered:
        return float(base_bits)
    ratio = (full_deg[0] * full_deg[1]) / (fov_deg[0] * fov_deg[1])
    return float(base_bits) * ratio


def _wrap_yaw(yaw):
    return (yaw + 180.0) % 360.0 - 180.0


def generate_synthetic_behaviour(K: int, num_steps: int, num_attractors: int, seed=0,
                                 noise_deg: float = 4.0, switch_prob: float = 0.02,
                                 step_seconds: float = 2.0, reversion: float = 0.7,
                                 assignment=None) -> np.ndarray:
    """Per-step viewing features of K users, shape (num_steps, K, 4).

    Attractors sit at equally spaced yaws on the horizon. Each user keeps a
    mean-reverting offset from its attractor and jumps to a different
    attractor with probability ``switch_prob`` per step. ``assignment``
    fixes the initial attractor of every user; by default users are dealt
    round-robin.
    """
    if num_attractors < 1 or K < 1 or num_steps < 1:
        raise ValueError("K, num_steps and num_attractors must be >= 1")
    rng = np.random.default_rng(seed)
    yaws = -180.0 + (np.arange(num_attractors) + 0.5) * 360.0 / num_attractors
    if assignment is None:
        which = np.arange(K) % num_attractors
    else:
        which = np.asarray(assignment, dtype=np.int64).copy()
    offset = np.zeros((K, 2))
    fov_area = (100.0 * 100.0) / (360.0 * 180.0)
    out = np.empty((num_steps, K, 4))
    prev = None
    for t in range(num_steps):
        if t > 0:
            if switch_prob > 0 and num_attractors > 1:
                jump = rng.random(K) < switch_prob
                shift = rng.integers(1, num_attractors, size=K)
                which = np.where(jump, (which + shift) % num_attractors, which)
            offset = reversion * offset + noise_deg * rng.standard_normal((K, 2))
        yaw = _wrap_yaw(yaws[which] + offset[:, 0])
        pitch = np.clip(offset[:, 1], -90.0, 90.0)
        centre = np.stack([yaw, pitch], axis=1)
        if prev is None:
            speed = np.zeros(K)
        else:
            d = centre - prev
            d[:, 0] = _wrap_yaw(d[:, 0])
            speed = np.hypot(d[:, 0], d[:, 1]) / step_seconds
        area = np.clip(fov_area * (1.0 + speed / 30.0), 0.0, 1.0)
        out[t] = np.column_stack([yaw, pitch, speed, area])
        prev = centre
    return out


def save_behaviour_csv(path, features) -> None:
    """Write a (steps, K, d) feature array as ``step,user,feat_0..``."""
    features = np.asarray(features, dtype=float)
    T, K, d = features.shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "user"] + [f"feat_{i}" for i in range(d)])
        for t in range(T):
            for k in range(K):
                w.writerow([t, k] + [repr(float(v)) for v in features[t, k]])


def load_behaviour_csv(path) -> np.ndarray:
    """Read a behaviour trace written by :func:`save_behaviour_csv`."""
    path = Path(path)
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if (header is None or len(header) < 3 or header[:2] != ["step", "user"]
                or header[2:] != [f"feat_{i}" for i in range(len(header) - 2)]):
            raise ValueError(f"{path}:1: expected header step,user,feat_0,...")
        d = len(header) - 2
        for lineno, row in enumerate(reader, start=2):
            if len(row) != d + 2:
                raise ValueError(f"{path}:{lineno}: expected {d + 2} fields, got {len(row)}")
            try:
                t, k = int(row[0]), int(row[1])
                vals = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            rows[(t, k)] = vals
    if not rows:
        raise ValueError(f"{path}: no data rows")
    T = max(t for t, _ in rows) + 1
    K = max(k for _, k in rows) + 1
    if len(rows) != T * K:
        raise ValueError(f"{path}: expected {T * K} (step, user) rows, got {len(rows)}")
    out = np.empty((T, K, d))
    for (t, k), vals in rows.items():
        out[t, k] = vals
    return out
