"""Proximity-comparison triplets and their factored constraint matrices.

A triplet (i, j, k) states that point i should be closer to j (same label)
than to k (different label). Each triplet's constraint matrix is kept in
factored form as two difference vectors, so evaluating it against a rank-one
or dense metric costs O(dim) or O(dim^2) instead of materializing a
dim x dim matrix per constraint.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import _check_symmetric


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (one row per point) with integer class labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=float)
        labels = np.asarray(self.labels)
        if feats.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {feats.shape}")
        if feats.shape[0] < 2 or feats.shape[1] < 1:
            raise ValueError(f"need at least 2 points and 1 dim, got {feats.shape}")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features contain NaN or Inf")
        if labels.ndim != 1 or labels.shape[0] != feats.shape[0]:
            raise ValueError("labels must be 1-D with one entry per point")
        if not np.issubdtype(labels.dtype, np.integer):
            as_int = labels.astype(int)
            if not np.array_equal(as_int, labels):
                raise ValueError("labels must be integers")
            labels = as_int
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def n_points(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]


class TripletConstraint(NamedTuple):
    """Indices (anchor, same-label target, different-label imposter)."""

    i: int
    j: int
    k: int


@dataclass(frozen=True)
class ConstraintFactors:
    """Factored constraint matrix u u^T - v v^T.

    ``u`` is anchor minus imposter, ``v`` is anchor minus target; the
    constraint asks u^T X u > v^T X v.
    """

    u: np.ndarray
    v: np.ndarray

    @property
    def dim(self):
        return self.u.shape[0]


def generate_triplets(data, k, seed=0):
    """All (anchor, target, imposter) triplets from k nearest neighbors.

    For every point, its k nearest same-label neighbors (targets) and k
    nearest different-label neighbors (imposters) under plain Euclidean
    distance are paired in all k*k combinations, so each anchor contributes
    k^2 triplets. Distance ties break toward the lower index; the output
    order is fixed (anchor-major, then target, then imposter), so ``seed``
    has no effect on the result and exists for interface stability.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    labels = data.labels
    classes, counts = np.unique(labels, return_counts=True)
    if classes.shape[0] < 2:
        raise ValueError("triplet generation needs at least 2 distinct labels")
    for cls, cnt in zip(classes, counts):
        if cnt < k + 1:
            raise ValueError(
                f"class {cls} has {cnt} members; need at least {k + 1} "
                f"for k={k} same-label neighbors"
            )

    feats = data.features
    n = data.n_points
    triplets = []
    for i in range(n):
        diffs = feats - feats[i]
        d2 = np.einsum("nd,nd->n", diffs, diffs)
        same = np.flatnonzero(labels == labels[i])
        same = same[same != i]
        diff = np.flatnonzero(labels != labels[i])
        targets = same[np.argsort(d2[same], kind="stable")[:k]]
        imposters = diff[np.argsort(d2[diff], kind="stable")[:k]]
        for j in targets:
            for imp in imposters:
                triplets.append(TripletConstraint(i, int(j), int(imp)))
    return triplets


def factors_from_triplet(data, t):
    """Difference vectors (anchor - imposter, anchor - target) for one triplet."""
    n = data.n_points
    for idx in (t.i, t.j, t.k):
        if not 0 <= idx < n:
            raise ValueError(f"triplet index {idx} out of range for {n} points")
    feats = data.features
    return ConstraintFactors(
        u=feats[t.i] - feats[t.k],
        v=feats[t.i] - feats[t.j],
    )


def factors_from_dataset(data, triplets):
    """Factor every triplet in one pass."""
    return [factors_from_triplet(data, t) for t in triplets]


def eval_rank_one(f, xi):
    """Constraint margin against the rank-one metric xi xi^T: (xi.u)^2 - (xi.v)^2."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != f.u.shape:
        raise ValueError(f"unit vector shape {xi.shape} != factor shape {f.u.shape}")
    if abs(np.linalg.norm(xi) - 1.0) > 1e-8:
        raise ValueError("xi must have unit Euclidean norm")
    return float((xi @ f.u) ** 2 - (xi @ f.v) ** 2)


def eval_full(f, X):
    """Constraint margin against a dense symmetric metric: u^T X u - v^T X v."""
    X = _check_symmetric(X, "eval_full")
    if X.shape[0] != f.dim:
        raise ValueError(f"metric dim {X.shape[0]} != factor dim {f.dim}")
    return float(f.u @ X @ f.u - f.v @ X @ f.v)


def stack_factors(factors):
    """Stack a factor list into C-contiguous (U, V) matrices for the kernels."""
    if len(factors) == 0:
        raise ValueError("constraint list is empty")
    dim = factors[0].dim
    for f in factors:
        if f.dim != dim:
            raise ValueError("constraint factors have mixed dimensions")
    U = np.ascontiguousarray(np.stack([f.u for f in factors]), dtype=float)
    V = np.ascontiguousarray(np.stack([f.v for f in factors]), dtype=float)
    return U, V
