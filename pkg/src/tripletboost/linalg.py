"""Symmetric-matrix kernels: iterative largest eigenpair and a dense oracle.

``largest_eigenpair`` extracts the largest *algebraic* eigenvalue (not the
largest in magnitude) of a matrix-free symmetric operator via Lanczos
iteration with full reorthogonalization. ``dense_evd`` is the dense
factorization used as a cross-check and for extracting projection matrices.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

_START_SEED = 12345
_MAX_DENSE_DIM = 4096
_BLOCK_CAP = 250


class EigenSolverError(RuntimeError):
    """Iteration budget exhausted; carries the best iterate found."""

    def __init__(self, message, value=None, vector=None, residual=None):
        super().__init__(message)
        self.value = value
        self.vector = vector
        self.residual = residual


@dataclass(frozen=True)
class SymmetricOperator:
    """A symmetric linear map given only by its action on vectors.

    ``apply`` must satisfy <apply(x), y> == <x, apply(y)> for all x, y.
    """

    dim: int
    apply: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray


def operator_from_matrix(M):
    """Wrap a dense symmetric matrix as a SymmetricOperator."""
    M = _check_symmetric(M, "operator_from_matrix")
    return SymmetricOperator(dim=M.shape[0], apply=lambda x: M @ x)


def largest_eigenpair(op, tol=1e-8, max_iter=None):
    """Largest algebraic eigenvalue and a unit eigenvector of ``op``.

    Runs Lanczos with full reorthogonalization from a deterministic start
    vector, restarting from the best Ritz vector (perturbed on breakdown)
    until the residual ||op(x) - lam*x|| drops below tol*max(1, |lam|).
    ``max_iter`` bounds the total number of operator applications; default
    10*dim + 1000. Raises EigenSolverError when the budget runs out and
    ValueError if the operator produces NaN/Inf.
    """
    dim = op.dim
    if dim < 1:
        raise ValueError("operator dimension must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter is None:
        max_iter = 10 * dim + 1000
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    rng = np.random.default_rng(_START_SEED)
    applies = 0

    def matvec(vec):
        nonlocal applies
        applies += 1
        out = np.asarray(op.apply(vec), dtype=float).reshape(dim)
        if not np.all(np.isfinite(out)):
            raise ValueError("operator produced non-finite values")
        return out

    start = _unit(rng.standard_normal(dim))
    block = min(dim, _BLOCK_CAP)
    best_val, best_vec, best_res = -np.inf, None, np.inf
    # Best candidate by scaled residual, including unverified Ritz estimates,
    # so a budget-exhaustion error can always report the best iterate seen.
    cand_val, cand_vec, cand_res = -np.inf, None, np.inf

    while applies < max_iter:
        Q = np.empty((block, dim))
        alphas = np.empty(block)
        betas = np.empty(block)
        Q[0] = start
        restart = None

        for j in range(block):
            if applies >= max_iter:
                break
            z = matvec(Q[j])
            alphas[j] = Q[j] @ z
            z -= alphas[j] * Q[j]
            if j > 0:
                z -= betas[j - 1] * Q[j - 1]
            for _ in range(2):
                z -= Q[: j + 1].T @ (Q[: j + 1] @ z)
            beta = float(np.linalg.norm(z))
            betas[j] = beta
            m = j + 1

            broke_down = beta <= 1e-12 * max(1.0, np.abs(alphas[:m]).max())
            if m <= 32 or m % 8 == 0 or broke_down or j == block - 1:
                theta, s = _top_ritz(alphas[:m], betas[: m - 1])
                estimate = beta * abs(s[-1])
                if estimate / max(1.0, abs(theta)) < cand_res:
                    cand_val = float(theta)
                    cand_vec = _unit(Q[:m].T @ s)
                    cand_res = estimate / max(1.0, abs(theta))
                if (
                    estimate <= max(tol, 1e-13) * max(1.0, abs(theta))
                    or broke_down
                    or j == block - 1
                ):
                    if applies >= max_iter:
                        break
                    x = _unit(Q[:m].T @ s)
                    ax = matvec(x)
                    lam = float(x @ ax)
                    res = float(np.linalg.norm(ax - lam * x))
                    if lam > best_val:
                        best_val, best_vec, best_res = lam, x, res
                    if res / max(1.0, abs(lam)) < cand_res:
                        cand_val, cand_vec = lam, x
                        cand_res = res / max(1.0, abs(lam))
                    if res <= tol * max(1.0, abs(lam)):
                        return EigenPair(value=lam, vector=x)
                    if broke_down:
                        # Invariant subspace that misses the target: perturb.
                        restart = _unit(x + 0.5 * rng.standard_normal(dim))
                        break
            if j < block - 1:
                Q[j + 1] = z / beta

        start = restart if restart is not None else best_vec
        if start is None:
            start = _unit(rng.standard_normal(dim))

    raise EigenSolverError(
        f"no eigenpair to tolerance {tol:g} within {max_iter} operator "
        f"applications (best scaled residual {cand_res:.3e})",
        value=cand_val if cand_vec is not None else None,
        vector=cand_vec,
        residual=cand_res if cand_vec is not None else None,
    )


def dense_evd(M):
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns ``(values, vectors)`` with vectors in columns, so that
    M == vectors @ diag(values) @ vectors.T up to round-off. Input must be
    symmetric to 1e-10 (relative) and at most 4096 x 4096.
    """
    M = _check_symmetric(M, "dense_evd")
    if M.shape[0] > _MAX_DENSE_DIM:
        raise ValueError(f"dense_evd limited to dim <= {_MAX_DENSE_DIM}")
    sym = 0.5 * (M + M.T)
    values, vectors = np.linalg.eigh(sym)
    # Stable sort keeps tied eigenvalues in their ascending-output order, so
    # e.g. the identity matrix decomposes to the identity basis.
    order = np.argsort(-values, kind="stable")
    return values[order].copy(), vectors[:, order].copy()


def _check_symmetric(M, who):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{who}: expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{who}: matrix contains non-finite values")
    scale = max(1.0, float(np.abs(M).max()))
    defect = float(np.abs(M - M.T).max())
    if defect > 1e-10 * scale:
        raise ValueError(f"{who}: matrix is not symmetric (defect {defect:.3e})")
    return M


def _top_ritz(alphas, betas):
    m = alphas.shape[0]
    T = np.diag(alphas)
    if m > 1:
        idx = np.arange(m - 1)
        T[idx, idx + 1] = betas
        T[idx + 1, idx] = betas
    vals, vecs = np.linalg.eigh(T)
    return float(vals[-1]), vecs[:, -1]


def _unit(x):
    n = np.linalg.norm(x)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return x / n
