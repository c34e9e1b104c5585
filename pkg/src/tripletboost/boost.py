"""Boosted metric training: rank-one weak learners by coordinate descent.

Each round extracts the largest eigenpair of the dual-weighted sum of
constraint matrices, adds the eigenvector's outer product as a new rank-one
basis element, sizes its weight by an exact bisection line search on the
exponential loss, and reweights constraints multiplicatively. Training stops
when the largest eigenvalue drops below the regularization strength, at
which point no direction can improve the penalized objective.
"""

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from . import backends
from .constraints import stack_factors
from .linalg import EigenSolverError, SymmetricOperator, largest_eigenpair
from .metric import BasisElement, MetricModel

# Re-exported here because basis elements are produced by the trainer.
__all__ = [
    "BasisElement",
    "TrainConfig",
    "IterationRecord",
    "TrainState",
    "AuditFrame",
    "TrainingError",
    "train",
    "line_search_w",
    "update_dual",
    "primal_objective",
    "check_convergence",
    "dual_feasibility_gap",
    "operator_from_factors",
]

_DEFAULT_W_CAP = 2.0 ** 60


class TrainingError(RuntimeError):
    """Training failed for a numerical reason (with the iteration in the message)."""


@dataclass
class TrainConfig:
    """Knobs for one training run.

    v is the regularization strength (larger stops earlier), max_iters caps
    the number of rank-one terms, bisect_tol is the line-search bracket width,
    eig_tol the eigenpair residual tolerance, and w_cap bounds a single
    coordinate step when the loss keeps decreasing without a finite minimum.
    """

    v: float = 1e-7
    max_iters: int = 500
    bisect_tol: float = 1e-9
    eig_tol: float = 1e-8
    w_cap: float = _DEFAULT_W_CAP

    def __post_init__(self):
        if not self.v > 0.0:
            raise ValueError("v must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.bisect_tol > 0.0:
            raise ValueError("bisect_tol must be positive")
        if not self.eig_tol > 0.0:
            raise ValueError("eig_tol must be positive")
        if not self.w_cap > 0.0:
            raise ValueError("w_cap must be positive")


@dataclass
class IterationRecord:
    """One training round as it appears in logs."""

    iteration: int
    lambda_max: float
    w: float
    objective: float
    elapsed: float
    step_capped: bool


@dataclass
class TrainState:
    """Final dual weights, margins, and per-iteration history of a run."""

    u: np.ndarray
    rho: np.ndarray
    history: list
    converged: bool
    final_lambda_max: float


@dataclass
class AuditFrame:
    """Snapshot handed to the per-iteration audit callback (copies, safe to keep)."""

    iteration: int
    lambda_max: float
    xi: np.ndarray
    h: np.ndarray
    w: float
    step_capped: bool
    u: np.ndarray
    rho: np.ndarray
    objective: float


def operator_from_factors(U, V, weights):
    """Matrix-free operator x -> sum_r weights_r (u_r (u_r.x) - v_r (v_r.x)).

    This is the dual-weighted sum of factored constraint matrices applied to
    a vector without ever forming the dense matrix.
    """
    U = np.ascontiguousarray(U, dtype=float)
    V = np.ascontiguousarray(V, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    if U.shape != V.shape or U.ndim != 2:
        raise ValueError("U and V must be 2-D with matching shapes")
    if weights.shape != (U.shape[0],):
        raise ValueError("weights must have one entry per constraint")

    def apply(x):
        x = np.ascontiguousarray(x, dtype=float)
        return backends.weighted_matvec(U, V, weights, x)

    return SymmetricOperator(dim=int(U.shape[1]), apply=apply)


def line_search_w(h, u, v, eps=1e-9, w_cap=_DEFAULT_W_CAP):
    """Exact nonnegative step size along one coordinate by bisection.

    Solves sum_r (h_r - v) u_r exp(-w h_r) = 0 for w > 0. The left side must
    be positive at w = 0 (the chosen direction violates the dual constraint);
    the bracket grows by doubling from 1 until the sign flips, then halves
    until narrower than ``eps``. Returns ``(w, capped)`` where ``capped``
    means the left side never went negative up to ``w_cap`` and the step was
    clamped there.
    """
    h = np.ascontiguousarray(h, dtype=float)
    u = np.ascontiguousarray(u, dtype=float)
    if h.shape != u.shape or h.ndim != 1:
        raise ValueError("h and u must be 1-D with matching shapes")
    lhs0 = backends.line_search_lhs(h, u, v, 0.0)
    if lhs0 <= 0.0:
        raise RuntimeError(
            "line search requires a violated direction (lhs(0) > 0); "
            "the convergence check should have stopped first"
        )
    lo = 0.0
    hi = 1.0
    while backends.line_search_lhs(h, u, v, hi) > 0.0:
        if hi >= w_cap:
            return float(w_cap), True
        lo = hi
        hi = min(hi * 2.0, w_cap)
    while hi - lo >= eps:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket narrower than float spacing
        if backends.line_search_lhs(h, u, v, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), False


def update_dual(u, h, w):
    """Multiplicative constraint reweighting u_r <- u_r exp(-w h_r), renormalized.

    Exponents are max-shifted before exponentiation, which changes nothing
    after normalization but avoids overflow for large steps.
    """
    u = np.asarray(u, dtype=float)
    h = np.asarray(h, dtype=float)
    if u.shape != h.shape or u.ndim != 1:
        raise ValueError("u and h must be 1-D with matching shapes")
    e = -w * h
    e -= e.max()
    num = u * np.exp(e)
    z = num.sum()
    if not z > 0.0:
        raise TrainingError("dual update collapsed to zero total weight")
    return num / z


def primal_objective(rho, w_sum, v):
    """Penalized objective log(sum_r exp(-rho_r)) + v * (sum of weights)."""
    rho = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(rho)):
        raise ValueError("margins contain NaN or Inf")
    m = float(np.max(-rho))
    return m + float(np.log(np.sum(np.exp(-rho - m)))) + v * w_sum


def check_convergence(lambda_max, v):
    """Stop when the best remaining direction's value is strictly below v."""
    return lambda_max < v


def train(factors, cfg=None, audit=None):
    """Learn a PSD metric from factored triplet constraints.

    Returns ``(model, state)``: the model holds the metric matrix, its
    rank-one basis, and run metadata; the state holds final dual weights,
    margins, and per-iteration history. ``audit``, if given, is called with
    an AuditFrame after every completed iteration.
    """
    if cfg is None:
        cfg = TrainConfig()
    U, V = stack_factors(factors)
    n_constraints, dim = U.shape

    u = np.full(n_constraints, 1.0 / n_constraints)
    rho = np.zeros(n_constraints)
    X = np.zeros((dim, dim))
    basis = []
    history = []
    w_sum = 0.0
    converged = False
    lam = float("nan")

    for it in range(1, cfg.max_iters + 1):
        t0 = time.perf_counter()
        op = operator_from_factors(U, V, u)
        try:
            pair = largest_eigenpair(op, tol=cfg.eig_tol)
        except (EigenSolverError, ValueError) as exc:
            raise TrainingError(f"eigen solver failed at iteration {it}: {exc}") from exc
        lam = pair.value
        if check_convergence(lam, cfg.v):
            converged = True
            break
        xi = np.ascontiguousarray(pair.vector, dtype=float)
        h = backends.margins_rank_one(U, V, xi)
        # Near the stopping boundary the eigenvalue estimate and the kernel's
        # edge sum can disagree within round-off; when the kernel says the
        # direction no longer violates, there is no step to take and the run
        # has converged to working precision.
        if backends.line_search_lhs(h, u, cfg.v, 0.0) <= 0.0:
            converged = True
            break
        try:
            w, capped = line_search_w(h, u, cfg.v, cfg.bisect_tol, cfg.w_cap)
        except RuntimeError as exc:
            raise TrainingError(f"line search failed at iteration {it}: {exc}") from exc
        basis.append(BasisElement(w=w, xi=xi))
        X += w * np.outer(xi, xi)
        rho += w * h
        u = update_dual(u, h, w)
        w_sum += w
        objective = primal_objective(rho, w_sum, cfg.v)
        history.append(
            IterationRecord(
                iteration=it,
                lambda_max=lam,
                w=w,
                objective=objective,
                elapsed=time.perf_counter() - t0,
                step_capped=capped,
            )
        )
        if audit is not None:
            audit(
                AuditFrame(
                    iteration=it,
                    lambda_max=lam,
                    xi=xi.copy(),
                    h=h.copy(),
                    w=w,
                    step_capped=capped,
                    u=u.copy(),
                    rho=rho.copy(),
                    objective=objective,
                )
            )

    digest = hashlib.sha256(U.tobytes() + V.tobytes()).hexdigest()
    meta = {
        "v": cfg.v,
        "max_iters": cfg.max_iters,
        "bisect_tol": cfg.bisect_tol,
        "eig_tol": cfg.eig_tol,
        "w_cap": cfg.w_cap,
        "iterations": len(history),
        "converged": converged,
        "final_lambda_max": lam,
        "n_constraints": n_constraints,
        "dim": dim,
        "constraints_sha256": digest,
        "backend": backends.backend_name,
    }
    model = MetricModel(dim=dim, X=X, basis=basis, meta=meta)
    state = TrainState(
        u=u,
        rho=rho,
        history=history,
        converged=converged,
        final_lambda_max=lam,
    )
    return model, state


def dual_feasibility_gap(model, factors, u, v):
    """Largest violation max_j (sum_r u_r h_rj) - v over the model's basis.

    At a dual optimum this is <= 0 up to round-off for every stored direction.
    An empty basis has no directions to violate, giving -v by convention.
    """
    u = np.asarray(u, dtype=float)
    if not model.basis:
        return -float(v)
    U, V = stack_factors(factors)
    if u.shape != (U.shape[0],):
        raise ValueError("u must have one entry per constraint")
    worst = -np.inf
    for b in model.basis:
        edge = float(u @ backends.margins_rank_one(U, V, b.xi))
        worst = max(worst, edge - float(v))
    return worst
