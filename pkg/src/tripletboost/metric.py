"""Learned Mahalanobis metric: PSD matrix, rank-one basis, and model files.

A model stores both the dense metric matrix X and the weighted unit vectors
whose outer products sum to it. Keeping the basis explicit makes the trace
identity Tr(X) = sum of weights checkable and lets a low-rank linear map be
extracted for embedding features into a space where plain Euclidean distance
matches the learned metric.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import _check_symmetric, dense_evd

MODEL_FORMAT = "tripletboost-model"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """A model file is unreadable, mismatched, or violates model invariants."""


class MetricConsistencyError(RuntimeError):
    """A supposedly PSD model produced a clearly negative squared distance."""


@dataclass(frozen=True)
class BasisElement:
    """One rank-one term: weight times the outer product of a unit vector."""

    w: float
    xi: np.ndarray

    def __post_init__(self):
        xi = np.ascontiguousarray(self.xi, dtype=float)
        if xi.ndim != 1 or xi.shape[0] < 1:
            raise ValueError(f"xi must be a 1-D vector, got shape {xi.shape}")
        if not np.all(np.isfinite(xi)):
            raise ValueError("xi contains NaN or Inf")
        if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
            raise ValueError("xi must have unit Euclidean norm")
        w = float(self.w)
        if not np.isfinite(w) or w < 0.0:
            raise ValueError(f"weight must be finite and >= 0, got {w}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "xi", xi)


@dataclass
class MetricModel:
    """Symmetric PSD metric with its rank-one decomposition and run metadata."""

    dim: int
    X: np.ndarray
    basis: list
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        if X.shape != (self.dim, self.dim):
            raise ValueError(f"X has shape {X.shape}, expected ({self.dim}, {self.dim})")
        self.X = X

    def validate(self):
        """Check symmetry, near-PSD-ness, and agreement with the stored basis.

        Raises ModelFormatError on any violation; returns self so calls chain.
        """
        try:
            _check_symmetric(self.X, "model matrix")
        except ValueError as exc:
            raise ModelFormatError(str(exc)) from exc
        values, _ = dense_evd(self.X)
        if values[-1] < -1e-9:
            raise ModelFormatError(
                f"model matrix has eigenvalue {values[-1]:.3e} below -1e-9"
            )
        for b in self.basis:
            if b.xi.shape[0] != self.dim:
                raise ModelFormatError("basis vector dimension does not match model")
        if self.basis:
            recon = np.zeros_like(self.X)
            for b in self.basis:
                recon += b.w * np.outer(b.xi, b.xi)
            scale = max(1.0, float(np.linalg.norm(self.X)))
            defect = float(np.linalg.norm(self.X - recon))
            if defect > 1e-8 * scale:
                raise ModelFormatError(
                    f"matrix does not match basis sum (defect {defect:.3e})"
                )
            w_sum = sum(b.w for b in self.basis)
            tr = float(np.trace(self.X))
            if abs(tr - w_sum) > 1e-8 * max(1.0, abs(tr)):
                raise ModelFormatError(
                    f"trace {tr!r} does not match weight sum {w_sum!r}"
                )
        return self


def identity_model(dim, meta=None):
    """Model for the plain Euclidean metric (X = I with unit basis vectors)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    eye = np.eye(dim)
    basis = [BasisElement(w=1.0, xi=eye[i]) for i in range(dim)]
    return MetricModel(dim=dim, X=eye.copy(), basis=basis, meta=dict(meta or {}))


def squared_distance(model, a, b):
    """Squared metric distance (a-b)^T X (a-b), clamped at tiny negatives.

    Round-off can push the quadratic form a hair below zero; values in
    [-1e-9, 0) clamp to 0. Anything more negative means the model is not PSD
    and raises MetricConsistencyError.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (model.dim,) or b.shape != (model.dim,):
        raise ValueError(
            f"points must have shape ({model.dim},), got {a.shape} and {b.shape}"
        )
    d = a - b
    val = float(d @ model.X @ d)
    if val < 0.0:
        if val >= -1e-9:
            return 0.0
        raise MetricConsistencyError(
            f"squared distance {val!r} is negative beyond round-off tolerance"
        )
    return val


def transform_matrix(model, d):
    """Rank-d linear map L (dim x d) with L L^T equal to the top-d part of X.

    Euclidean distances between rows of (features @ L) reproduce the learned
    metric restricted to its d strongest eigendirections. Negative round-off
    eigenvalues are clipped to zero before the square root.
    """
    if not 1 <= d <= model.dim:
        raise ValueError(f"d must be in [1, {model.dim}], got {d}")
    values, vectors = dense_evd(model.X)
    top = np.clip(values[:d], 0.0, None)
    return vectors[:, :d] * np.sqrt(top)


def save(model, path):
    """Write a model as self-describing JSON; floats keep full precision."""
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "dim": model.dim,
        "matrix": [[float(x) for x in row] for row in model.X],
        "basis": [
            {"w": b.w, "xi": [float(x) for x in b.xi]} for b in model.basis
        ],
        "meta": model.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load(path):
    """Read a model file, rejecting truncated, mismatched, or inconsistent data."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a complete JSON document ({exc})") from exc
    if not isinstance(payload, dict):
        raise ModelFormatError(f"{path}: expected a JSON object at top level")
    if payload.get("format") != MODEL_FORMAT:
        raise ModelFormatError(
            f"{path}: format {payload.get('format')!r} is not {MODEL_FORMAT!r}"
        )
    if payload.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"{path}: version {payload.get('version')!r} is not supported "
            f"(expected {MODEL_VERSION})"
        )
    try:
        dim = int(payload["dim"])
        X = np.array(payload["matrix"], dtype=float)
        basis = [
            BasisElement(w=float(b["w"]), xi=np.array(b["xi"], dtype=float))
            for b in payload["basis"]
        ]
        meta = payload.get("meta", {})
        if not isinstance(meta, dict):
            raise ModelFormatError(f"{path}: meta must be a JSON object")
        model = MetricModel(dim=dim, X=X, basis=basis, meta=meta)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model fields ({exc})") from exc
    try:
        return model.validate()
    except ModelFormatError as exc:
        raise ModelFormatError(f"{path}: {exc}") from exc
