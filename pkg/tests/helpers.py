"""Shared independent oracles for the test suite.

Everything here is deliberately written the straightforward way (dense
matrices, explicit loops) so it exercises none of the library's fast paths.
"""

import numpy as np

from tripletboost.constraints import ConstraintFactors, stack_factors


def line_search_reference(h, u, v, w):
    """Unscaled left side of the line-search equation, direct evaluation."""
    return float(np.sum((h - v) * u * np.exp(-w * h)))


def objective_of_matrix(factors, v, X):
    """Penalized training objective evaluated at a dense metric matrix."""
    rho = np.array([f.u @ X @ f.u - f.v @ X @ f.v for f in factors])
    m = np.max(-rho)
    return float(m + np.log(np.sum(np.exp(-rho - m))) + v * np.trace(X))


def optimality_instance(seed):
    """Tiny two-dimensional instance whose objective is bounded below.

    The third constraint swaps the first one's difference vectors, so
    margins come in opposing pairs and no direction can drive the loss to
    minus infinity.
    """
    rng = np.random.default_rng(seed)
    f1 = ConstraintFactors(u=rng.standard_normal(2), v=rng.standard_normal(2))
    f2 = ConstraintFactors(u=rng.standard_normal(2), v=rng.standard_normal(2))
    return [f1, f2, ConstraintFactors(u=f1.v, v=f1.u)]


def grid_minimum_2d(factors, v):
    """Brute-force-grid minimum of the penalized objective over 2x2 PSD X.

    X is parameterized by an eigenbasis angle and two nonnegative
    eigenvalues. The angle is swept densely on every round (the objective is
    flat in the angle wherever both eigenvalues are zero, so zooming the
    angle would lose the basin); the eigenvalue ladder starts logarithmic to
    cover many scales and is refined linearly around the best cell.
    """
    U, V = stack_factors(factors)
    thetas = np.linspace(0.0, np.pi, 361)
    q = np.stack([np.cos(thetas), np.sin(thetas)])
    p = np.stack([-np.sin(thetas), np.cos(thetas)])
    hq = (U @ q) ** 2 - (V @ q) ** 2  # (n, T)
    hp = (U @ p) ** 2 - (V @ p) ** 2

    def sweep(l1s, l2s):
        rho = (
            hq[:, :, None, None] * l1s[None, None, :, None]
            + hp[:, :, None, None] * l2s[None, None, None, :]
        )
        m = np.max(-rho, axis=0)
        loss = m + np.log(np.sum(np.exp(-rho - m), axis=0))
        return loss + v * (l1s[:, None] + l2s[None, :])

    l1s = l2s = np.concatenate([[0.0], np.geomspace(1e-4, 1e4, 81)])
    best = np.inf
    for _ in range(4):
        vals = sweep(l1s, l2s)
        idx = np.unravel_index(np.argmin(vals), vals.shape)
        best = min(best, float(vals[idx]))
        c1, c2 = l1s[idx[1]], l2s[idx[2]]
        s1 = max(
            l1s[min(idx[1] + 1, len(l1s) - 1)] - c1,
            c1 - l1s[max(idx[1] - 1, 0)],
            1e-7,
        )
        s2 = max(
            l2s[min(idx[2] + 1, len(l2s) - 1)] - c2,
            c2 - l2s[max(idx[2] - 1, 0)],
            1e-7,
        )
        l1s = np.linspace(max(0.0, c1 - s1), c1 + s1, 41)
        l2s = np.linspace(max(0.0, c2 - s2), c2 + s2, 41)
    return best


def naive_knn_label(train_features, train_labels, query, k, metric=None):
    """Reference kNN vote: sort by (distance, index), majority, nearest tie-break."""
    dists = []
    for i, row in enumerate(train_features):
        d = np.asarray(row, dtype=float) - np.asarray(query, dtype=float)
        if metric is None:
            dists.append((float(d @ d), i))
        else:
            dists.append((float(d @ metric @ d), i))
    dists.sort()
    voters = [int(train_labels[i]) for _, i in dists[:k]]
    counts = {}
    for lbl in voters:
        counts[lbl] = counts.get(lbl, 0) + 1
    top = max(counts.values())
    for lbl in voters:
        if counts[lbl] == top:
            return lbl
    raise AssertionError("vote cannot be empty")


def naive_precision(features, labels, target, cutoffs, metric=None):
    """Reference retrieval precision: rank every other point, count matches."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    queries = [i for i in range(len(labels)) if labels[i] == target]
    out = np.zeros(len(cutoffs))
    for q in queries:
        ranked = []
        for i in range(len(labels)):
            if i == q:
                continue
            d = features[i] - features[q]
            val = float(d @ d) if metric is None else float(d @ metric @ d)
            ranked.append((val, i))
        ranked.sort()
        for ci, c in enumerate(cutoffs):
            hits = sum(1 for _, i in ranked[:c] if labels[i] == target)
            out[ci] += hits / c
    return out / len(queries)
