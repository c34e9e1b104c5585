"""Evaluation harness: stratified runs, kNN error, retrieval precision.

Experiments follow one shape: repeat R times with run-specific seeds, each
run drawing a stratified train/test split, optionally reducing dimension by
PCA fitted on the training half only, training a metric on triplets from the
training half, and scoring on the held-out half. Reported numbers are
per-run values plus mean and sample standard deviation.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .boost import TrainConfig, train
from .constraints import Dataset, factors_from_dataset, generate_triplets
from .metric import MetricModel


@dataclass(frozen=True)
class PcaBasis:
    """Train-set mean and principal directions (columns) for projection."""

    mean: np.ndarray
    components: np.ndarray


@dataclass
class ExperimentSpec:
    """Everything that defines a repeated-split experiment."""

    features: np.ndarray
    labels: np.ndarray
    n_train: int
    n_test: int
    n_runs: int = 10
    knn_k: int = 3
    triplet_k: int = 3
    pca_dim: int | None = None
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=float)
        labels = np.asarray(self.labels)
        if feats.ndim != 2:
            raise ValueError("features must be 2-D")
        if labels.shape != (feats.shape[0],):
            raise ValueError("labels must have one entry per point")
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be >= 1")
        if self.n_train + self.n_test > feats.shape[0]:
            raise ValueError("n_train + n_test exceeds the number of points")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.knn_k < 1 or self.triplet_k < 1:
            raise ValueError("knn_k and triplet_k must be >= 1")
        if self.pca_dim is not None and not 1 <= self.pca_dim <= feats.shape[1]:
            raise ValueError(f"pca_dim must be in [1, {feats.shape[1]}]")
        self.features = feats
        self.labels = labels

    @classmethod
    def from_fraction(cls, features, labels, train_frac, **kwargs):
        """Sizes from a train fraction; the rest of the points go to test."""
        if not 0.0 < train_frac < 1.0:
            raise ValueError("train_frac must be strictly between 0 and 1")
        n = np.asarray(features).shape[0]
        n_train = int(round(train_frac * n))
        n_train = min(max(n_train, 1), n - 1)
        return cls(features, labels, n_train=n_train, n_test=n - n_train, **kwargs)


@dataclass
class ExperimentResult:
    """Per-run error rates in percent with their mean and sample std."""

    errors: np.ndarray
    seconds: np.ndarray
    mean: float
    std: float

    @classmethod
    def from_runs(cls, errors, seconds):
        errors = np.asarray(errors, dtype=float)
        seconds = np.asarray(seconds, dtype=float)
        std = float(np.std(errors, ddof=1)) if errors.size >= 2 else 0.0
        return cls(errors=errors, seconds=seconds, mean=float(np.mean(errors)), std=std)


@dataclass
class RetrievalResult:
    """Precision at each cutoff, per run and aggregated."""

    cutoffs: list
    per_run: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    seconds: np.ndarray


@dataclass
class VSweepResult:
    """Boosted results per regularization value plus the fixed Euclidean baseline."""

    v_values: list
    boosted: list
    euclidean: ExperimentResult


def _bounded_quota(total, weights, lower, upper):
    """Integer allocation proportional to weights, within [lower, upper] per slot.

    Largest-remainder rounding with deterministic tie-breaks (lower slot index
    first). ``total`` must lie between the sums of the bounds.
    """
    weights = np.asarray(weights, dtype=float)
    lower = np.asarray(lower, dtype=int)
    upper = np.asarray(upper, dtype=int)
    if lower.sum() > total or upper.sum() < total:
        raise ValueError("allocation infeasible within bounds")
    quota = total * weights / weights.sum()
    base = np.clip(np.floor(quota).astype(int), lower, upper)
    while base.sum() < total:
        frac = np.where(base < upper, quota - base, -np.inf)
        base[int(np.argmax(frac))] += 1
    while base.sum() > total:
        frac = np.where(base > lower, quota - base, np.inf)
        base[int(np.argmin(frac))] -= 1
    return base


def stratified_split(labels, n_train, n_test, rng):
    """Disjoint train/test index arrays with every class on both sides.

    Class proportions are preserved by largest-remainder rounding, then each
    class's members are shuffled and dealt to train first, test second.
    Returned index arrays are sorted. Raises if any class is too small for
    both sides or the requested sizes cannot cover every class.
    """
    labels = np.asarray(labels)
    n = labels.shape[0]
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be >= 1")
    if n_train + n_test > n:
        raise ValueError("n_train + n_test exceeds the number of points")
    classes, counts = np.unique(labels, return_counts=True)
    n_classes = classes.shape[0]
    for cls, cnt in zip(classes, counts):
        if cnt < 2:
            raise ValueError(
                f"class {cls} has {cnt} member(s); need >= 2 to appear in both splits"
            )
    if n_train < n_classes or n_test < n_classes:
        raise ValueError(
            f"both split sizes must be >= {n_classes} so every class appears in each"
        )
    take_train = _bounded_quota(
        n_train, counts, np.ones(n_classes, dtype=int), counts - 1
    )
    remaining = counts - take_train
    take_test = _bounded_quota(
        n_test, remaining, np.ones(n_classes, dtype=int), remaining
    )
    train_idx = []
    test_idx = []
    for c, t, s in zip(classes, take_train, take_test):
        members = np.flatnonzero(labels == c)
        perm = rng.permutation(members)
        train_idx.append(perm[:t])
        test_idx.append(perm[t : t + s])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(test_idx))


def pca_fit(features, d):
    """Principal directions of the centered feature matrix via SVD.

    The sign of each component is fixed so its largest-magnitude entry is
    positive, making the projection deterministic.
    """
    feats = np.asarray(features, dtype=float)
    if feats.ndim != 2:
        raise ValueError("features must be 2-D")
    n, full_dim = feats.shape
    if not 1 <= d <= min(n, full_dim):
        raise ValueError(f"d must be in [1, {min(n, full_dim)}]")
    mean = feats.mean(axis=0)
    centered = feats - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:d].T.copy()
    for col in range(d):
        pivot = int(np.argmax(np.abs(components[:, col])))
        if components[pivot, col] < 0.0:
            components[:, col] = -components[:, col]
    return PcaBasis(mean=mean, components=components)


def pca_project(basis, features):
    """Center by the stored mean and project onto the stored directions."""
    feats = np.asarray(features, dtype=float)
    single = feats.ndim == 1
    if single:
        feats = feats[None, :]
    if feats.shape[1] != basis.mean.shape[0]:
        raise ValueError("feature dimension does not match the PCA basis")
    out = (feats - basis.mean) @ basis.components
    return out[0] if single else out


def _distances_to(train_features, model, query):
    """Squared distances from one query to every training row."""
    diffs = train_features - query
    if model is None:
        return np.einsum("nd,nd->n", diffs, diffs)
    return np.einsum("nd,de,ne->n", diffs, model.X, diffs)


def knn_predict(train_features, train_labels, model, query, k):
    """Majority vote over the k nearest training points.

    ``model=None`` means plain squared Euclidean distance, computed directly
    rather than through an identity metric. Distance ties prefer the lower
    training index; vote ties go to the tied label owning the nearest
    neighbor.
    """
    train_features = np.asarray(train_features, dtype=float)
    train_labels = np.asarray(train_labels)
    n = train_features.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    query = np.asarray(query, dtype=float)
    if query.shape != (train_features.shape[1],):
        raise ValueError("query dimension does not match training features")
    if model is not None and model.dim != train_features.shape[1]:
        raise ValueError("model dimension does not match training features")
    d = _distances_to(train_features, model, query)
    nn_labels = train_labels[np.argsort(d, kind="stable")[:k]]
    values, votes = np.unique(nn_labels, return_counts=True)
    top = votes.max()
    winners = values[votes == top]
    if winners.shape[0] == 1:
        return int(winners[0])
    winner_set = set(int(w) for w in winners)
    for lbl in nn_labels:
        if int(lbl) in winner_set:
            return int(lbl)
    raise AssertionError("unreachable: some neighbor must hold a winning label")


def _fit_run_model(spec, feats_train, labels_train, method, run_seed):
    """Resolve the metric for one run: train fresh, reuse fixed, or None."""
    if method == "euclidean":
        return None
    if method == "boosted":
        data = Dataset(feats_train, labels_train)
        triplets = generate_triplets(data, spec.triplet_k, seed=run_seed)
        factors = factors_from_dataset(data, triplets)
        model, _ = train(factors, spec.train_cfg)
        return model
    if isinstance(method, MetricModel):
        if method.dim != feats_train.shape[1]:
            raise ValueError(
                f"fixed model dimension {method.dim} does not match "
                f"evaluation dimension {feats_train.shape[1]}"
            )
        return method
    raise ValueError(f"unknown method {method!r}")


def _prepare_run(spec, run_index):
    """Split and optionally PCA-reduce the data for one run."""
    rng = np.random.default_rng(spec.seed + run_index)
    train_idx, test_idx = stratified_split(spec.labels, spec.n_train, spec.n_test, rng)
    feats_train = spec.features[train_idx]
    feats_test = spec.features[test_idx]
    if spec.pca_dim is not None:
        basis = pca_fit(feats_train, spec.pca_dim)
        feats_train = pca_project(basis, feats_train)
        feats_test = pca_project(basis, feats_test)
    return feats_train, spec.labels[train_idx], feats_test, spec.labels[test_idx]


def classification_error(spec, method="boosted"):
    """kNN test error (percent) over repeated stratified runs.

    ``method`` is "boosted" (train a metric per run), "euclidean" (no
    metric), or a fixed MetricModel applied to every run. A failure in any
    run aborts the experiment with that run's index in the message.
    """
    errors = np.empty(spec.n_runs)
    seconds = np.empty(spec.n_runs)
    for r in range(spec.n_runs):
        t0 = time.perf_counter()
        try:
            feats_tr, y_tr, feats_te, y_te = _prepare_run(spec, r)
            model = _fit_run_model(spec, feats_tr, y_tr, method, spec.seed + r)
            wrong = 0
            for q, truth in zip(feats_te, y_te):
                if knn_predict(feats_tr, y_tr, model, q, spec.knn_k) != int(truth):
                    wrong += 1
        except Exception as exc:
            raise RuntimeError(f"run {r} failed: {exc}") from exc
        errors[r] = 100.0 * wrong / feats_te.shape[0]
        seconds[r] = time.perf_counter() - t0
    return ExperimentResult.from_runs(errors, seconds)


def precision_at_cutoffs(features, labels, model, target_label, cutoffs):
    """Mean retrieval precision at each cutoff, averaged over target queries.

    Every point of the target class queries the rest of the set; points are
    ranked by metric distance (stable ties) and precision is the fraction of
    the top c that share the target label.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    n = features.shape[0]
    cutoffs = [int(c) for c in cutoffs]
    if not cutoffs:
        raise ValueError("need at least one cutoff")
    if min(cutoffs) < 1 or max(cutoffs) > n - 1:
        raise ValueError(f"cutoffs must be in [1, {n - 1}]")
    queries = np.flatnonzero(labels == target_label)
    if queries.size == 0:
        raise ValueError(f"no points carry the target label {target_label!r}")
    deepest = max(cutoffs)
    per_query = np.empty((queries.size, len(cutoffs)))
    for row, q in enumerate(queries):
        d = _distances_to(features, model, features[q])
        d[q] = np.inf
        ranked = np.argsort(d, kind="stable")[:deepest]
        hits = np.cumsum(labels[ranked] == target_label)
        per_query[row] = [hits[c - 1] / c for c in cutoffs]
    return per_query.mean(axis=0)


def retrieval_precision(spec, target_label, cutoffs, method="boosted"):
    """Retrieval precision on the held-out half over repeated stratified runs."""
    labels = np.asarray(spec.labels)
    if not np.any(labels == target_label):
        raise ValueError(f"target label {target_label!r} not present in the data")
    cutoffs = [int(c) for c in cutoffs]
    if not cutoffs or min(cutoffs) < 1 or max(cutoffs) > spec.n_test - 1:
        raise ValueError(f"cutoffs must be in [1, {spec.n_test - 1}]")
    per_run = np.empty((spec.n_runs, len(cutoffs)))
    seconds = np.empty(spec.n_runs)
    for r in range(spec.n_runs):
        t0 = time.perf_counter()
        try:
            feats_tr, y_tr, feats_te, y_te = _prepare_run(spec, r)
            model = _fit_run_model(spec, feats_tr, y_tr, method, spec.seed + r)
            per_run[r] = precision_at_cutoffs(feats_te, y_te, model, target_label, cutoffs)
        except Exception as exc:
            raise RuntimeError(f"run {r} failed: {exc}") from exc
        seconds[r] = time.perf_counter() - t0
    std = (
        np.std(per_run, axis=0, ddof=1)
        if spec.n_runs >= 2
        else np.zeros(len(cutoffs))
    )
    return RetrievalResult(
        cutoffs=cutoffs,
        per_run=per_run,
        mean=per_run.mean(axis=0),
        std=std,
        seconds=seconds,
    )


def v_sweep(spec, v_values, include_euclidean=True):
    """Boosted error across regularization strengths, plus one fixed baseline.

    All runs share the spec's base seed, so every v value sees identical
    splits and the Euclidean baseline is computed once.
    """
    v_values = [float(v) for v in v_values]
    if not v_values:
        raise ValueError("need at least one regularization value")
    for v in v_values:
        if not v > 0.0:
            raise ValueError("regularization values must be positive")
    boosted = []
    for v in v_values:
        cfg = replace(spec.train_cfg, v=v)
        boosted.append(classification_error(replace(spec, train_cfg=cfg), "boosted"))
    euclidean = (
        classification_error(spec, "euclidean") if include_euclidean else None
    )
    return VSweepResult(v_values=v_values, boosted=boosted, euclidean=euclidean)
