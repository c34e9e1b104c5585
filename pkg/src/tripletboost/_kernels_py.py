"""Pure NumPy implementations of the hot constraint-sum kernels.

Mirror images of the compiled versions in ``_kernels.pyx``; used when the
extension is not built or when ``TRIPLETBOOST_BACKEND=python`` is set.
All routines expect C-contiguous float64 arrays.
"""

import numpy as np

NAME = "python"


def weighted_matvec(U, V, w, x):
    """Apply the constraint-weighted operator to ``x``.

    Computes sum_r w[r] * ((U[r].x) U[r] - (V[r].x) V[r]) without ever
    materializing the dense matrix.
    """
    return U.T @ (w * (U @ x)) - V.T @ (w * (V @ x))


def margins_rank_one(U, V, xi):
    """Per-constraint margin of the rank-one matrix xi xi^T: (U[r].xi)^2 - (V[r].xi)^2."""
    return (U @ xi) ** 2 - (V @ xi) ** 2


def margins_full(U, V, X):
    """Per-constraint margin under a dense metric X: U[r]^T X U[r] - V[r]^T X V[r]."""
    return ((U @ X) * U).sum(axis=1) - ((V @ X) * V).sum(axis=1)


def line_search_lhs(h, u, v, w):
    """Sign of the coordinate-step optimality condition at step size ``w``.

    Returns sum_r (h[r] - v) * u[r] * exp(-w * h[r]) rescaled by a positive
    factor (the largest exponent is shifted to zero so the sum cannot
    overflow). Only the sign and the zero crossing are meaningful.
    """
    e = -w * h
    e -= e.max()
    return float(((h - v) * u * np.exp(e)).sum())
