"""Smoothing primitives: smoothed dual, quadratic penalty, proximal and gradient maps.

The dual function d(y) = sum_i min_{x_i} {phi_i + y^T A_i x_i} - b^T y is
nonsmooth; adding beta1-weighted prox terms inside each component
minimization makes it differentiable with a 1/beta1 Lipschitz gradient.
On the primal side the constraint is smoothed by the quadratic penalty
psi(x; beta2) = ||Ax - b||^2 / (2 beta2), giving the upper model
f(x; beta2) = phi(x) + psi(x; beta2).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import inner
from .problem import LinearMinusLog, ProblemError

__all__ = [
    "SmoothedDualEval",
    "PenaltyEval",
    "smoothed_dual",
    "exact_dual",
    "smoothed_dual_gradient_check",
    "penalty_eval",
    "proximal_map",
    "gradient_map",
    "mixed_primal_map",
    "dual_gradient_map",
    "prox_diameter_estimates",
]


@dataclass(frozen=True, eq=False)
class SmoothedDualEval:
    """d(y; beta1), its per-component minimizers (stacked flat) and gradient A x* - b."""

    value: float
    minimizers: np.ndarray
    gradient: np.ndarray


@dataclass(frozen=True, eq=False)
class PenaltyEval:
    """psi(x; beta2) = ||Ax-b||^2/(2 beta2), its maximizing multiplier and f = phi + psi."""

    psi_value: float
    multiplier: np.ndarray
    f_value: float


def _map_components(fn, count, workers):
    """Apply fn(i) for i in range(count); results always joined in index order."""
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(i) for i in range(count)]


# ---------------------------------------------------------------------------
# batched fast path for the uniform allocation family


@dataclass(frozen=True, eq=False)
class _AllocationBatch:
    a: np.ndarray
    w: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    centers: np.ndarray
    rho: np.ndarray

    def phi_rows(self, X):
        return np.sum(self.a * X, axis=1) - self.w * np.log1p(np.sum(self.b * X, axis=1))

    def grad_rows(self, X):
        s = 1.0 + np.sum(self.b * X, axis=1)
        return self.a - (self.w / s)[:, None] * self.b


_BATCH_ATTR = "_egap_allocation_batch"


def _allocation_batch(problem):
    """Stacked parameters when every component is linear-minus-log with an identity block."""
    cached = getattr(problem, _BATCH_ATTR, "unset")
    if cached != "unset":
        return cached
    batch = None
    comps = problem.components
    if all(
        isinstance(c.objective, LinearMinusLog) and c.block is None and c.dim == problem.m
        for c in comps
    ):
        batch = _AllocationBatch(
            a=np.stack([c.objective.a for c in comps]),
            w=np.array([c.objective.w for c in comps]),
            b=np.stack([c.objective.b for c in comps]),
            lower=np.stack([c.lower for c in comps]),
            upper=np.stack([c.upper for c in comps]),
            centers=np.stack([c.prox.center for c in comps]),
            rho=np.array([c.prox.rho for c in comps]),
        )
    object.__setattr__(problem, _BATCH_ATTR, batch)
    return batch


def _solve_components(problem, lin_rows, q_per_comp, z_full, inner_tol, workers):
    """Minimize phi_i + lin_i^T x_i + (q_i/2)||x_i - z_i||^2 per component; stacked result.

    lin_rows: either a dual vector y (identity-block shortcut handled per
    component via A_i^T y) or a list of per-component linear terms.
    """
    batch = _allocation_batch(problem)
    z_parts = problem.split(z_full)
    if batch is not None:
        lin = np.stack(lin_rows) if isinstance(lin_rows, list) else np.broadcast_to(
            lin_rows, batch.a.shape
        )
        Z = np.stack(z_parts)
        X = inner.solve_linear_minus_log_batch(
            batch.a, batch.w, batch.b, lin, q_per_comp, Z, batch.lower, batch.upper
        )
        return X.ravel()

    q_arr = np.broadcast_to(np.asarray(q_per_comp, dtype=float), (problem.M,))

    def solve_one(i):
        comp = problem.components[i]
        lin_i = lin_rows[i] if isinstance(lin_rows, list) else comp.apply_block_T(lin_rows)
        spec = inner.SubproblemSpec(
            objective=comp.objective,
            lin=lin_i,
            q=float(q_arr[i]),
            z=z_parts[i],
            lower=comp.lower,
            upper=comp.upper,
        )
        return inner.solve(spec, inner_tol)

    return np.concatenate(_map_components(solve_one, problem.M, workers))


# ---------------------------------------------------------------------------
# smoothed dual


def smoothed_dual(problem, y, beta1, inner_tol=1e-11, workers=1):
    """Evaluate d(y; beta1) = sum_i min_{x_i}{phi_i + y^T A_i x_i + beta1 p_i} - b^T y.

    The b^T y term is split as -(1/M) b^T y per component, so the value is a
    plain ordered sum of local quantities. The gradient A x*(y; beta1) - b is
    assembled through the same blockwise residual path used everywhere else.
    """
    if not beta1 > 0:
        raise ValueError("beta1 must be positive")
    y = np.asarray(y, dtype=float)
    q = beta1 * np.array([c.prox.rho for c in problem.components])
    x = _solve_components(problem, y, q, problem.prox_centers(), inner_tol, workers)
    b_share = float(problem.b @ y) / problem.M
    value = 0.0
    for comp, xi in zip(problem.components, problem.split(x)):
        value += (
            comp.objective.value(xi)
            + float(y @ comp.apply_block(xi))
            + beta1 * comp.prox.value(xi)
            - b_share
        )
    return SmoothedDualEval(value=value, minimizers=x, gradient=problem.residual(x))


def exact_dual(problem, y, inner_tol=1e-11, workers=1):
    """d(y) without smoothing; requires every objective to be strongly convex."""
    y = np.asarray(y, dtype=float)
    for i, comp in enumerate(problem.components):
        if comp.objective.strong_convexity <= 0:
            raise ProblemError(f"component {i}: exact dual needs a strongly convex objective")
    x = _solve_components(problem, y, 0.0, problem.prox_centers(), inner_tol, workers)
    b_share = float(problem.b @ y) / problem.M
    value = 0.0
    for comp, xi in zip(problem.components, problem.split(x)):
        value += comp.objective.value(xi) + float(y @ comp.apply_block(xi)) - b_share
    return SmoothedDualEval(value=value, minimizers=x, gradient=problem.residual(x))


def smoothed_dual_gradient_check(problem, y, beta1, h=None, inner_tol=1e-11, workers=1):
    """Max componentwise error between central differences of d(.; beta1) and its gradient.

    Errors are scaled by max(1, |gradient component|). Returns the worst
    coordinate's error.
    """
    y = np.asarray(y, dtype=float)
    if h is None:
        h = 1e-5 * (1.0 + np.linalg.norm(y))
    grad = smoothed_dual(problem, y, beta1, inner_tol, workers).gradient
    worst = 0.0
    for j in range(y.size):
        e = np.zeros_like(y)
        e[j] = h
        d_plus = smoothed_dual(problem, y + e, beta1, inner_tol, workers).value
        d_minus = smoothed_dual(problem, y - e, beta1, inner_tol, workers).value
        fd = (d_plus - d_minus) / (2.0 * h)
        worst = max(worst, abs(fd - grad[j]) / max(1.0, abs(grad[j])))
    return worst


# ---------------------------------------------------------------------------
# penalty smoothing


def penalty_eval(problem, x, beta2):
    """psi(x; beta2), the maximizing multiplier y*(x; beta2) and f(x; beta2)."""
    if not beta2 > 0:
        raise ValueError("beta2 must be positive")
    r = problem.residual(x)
    psi = float(r @ r) / (2.0 * beta2)
    return PenaltyEval(psi_value=psi, multiplier=r / beta2, f_value=problem.objective_value(x) + psi)


# ---------------------------------------------------------------------------
# proximal / gradient maps


def _penalty_multiplier(problem, x_hat, beta2):
    return problem.residual(x_hat) / beta2


def proximal_map(problem, x_hat, beta2, constants, inner_tol=1e-11, workers=1):
    """P(x_hat; beta2): per component, minimize phi_i plus the linearized penalty
    plus (L_i^psi(beta2)/2)||x_i - x_hat_i||^2 over the box."""
    if not beta2 > 0:
        raise ValueError("beta2 must be positive")
    q = constants.psi_lipschitz(beta2)
    if np.any(q <= 0):
        i = int(np.argmax(q <= 0))
        raise ProblemError(f"component {i}: zero coupling block makes the proximal map singular")
    y_star = _penalty_multiplier(problem, x_hat, beta2)
    return _solve_components(problem, y_star, q, np.asarray(x_hat, float), inner_tol, workers)


def gradient_map(problem, x_hat, beta2, constants, workers=1):
    """Gradient-mapping alternative to P for smooth components.

    Per component: clip(x_hat_i - (grad phi_i(x_hat_i) + A_i^T y*) / Lhat_i)
    with Lhat_i = L_phi_i + M||A_i||^2/beta2. Raises if any component lacks a
    gradient.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    for i, comp in enumerate(problem.components):
        if comp.gradient_lipschitz is None:
            raise ProblemError(f"component {i}: gradient mapping needs a smooth objective")
    lhat = np.array([c.gradient_lipschitz for c in problem.components]) + constants.psi_lipschitz(
        beta2
    )
    y_star = _penalty_multiplier(problem, x_hat, beta2)
    parts = problem.split(x_hat)

    def map_one(i):
        comp = problem.components[i]
        step = (comp.objective.grad(parts[i]) + comp.apply_block_T(y_star)) / lhat[i]
        return np.clip(parts[i] - step, comp.lower, comp.upper)

    return np.concatenate(_map_components(map_one, problem.M, workers))


def mixed_primal_map(problem, x_hat, beta2, constants, grad_mask, inner_tol=1e-11, workers=1):
    """Proximal map with the gradient mapping substituted on masked components."""
    x_plus = proximal_map(problem, x_hat, beta2, constants, inner_tol, workers)
    if not np.any(grad_mask):
        return x_plus
    grad_full = gradient_map(problem, x_hat, beta2, constants, workers)
    out = x_plus.copy()
    for i, (sl_out, sl_g) in enumerate(zip(problem.split(out), problem.split(grad_full))):
        if grad_mask[i]:
            sl_out[:] = sl_g
    return out


def dual_gradient_map(problem, y_hat, beta1, constants, inner_tol=1e-11, workers=1):
    """G(y_hat; beta1) = y_hat + grad d(y_hat; beta1) / L^d(beta1)."""
    ev = smoothed_dual(problem, y_hat, beta1, inner_tol, workers)
    return np.asarray(y_hat, float) + ev.gradient / constants.dual_lipschitz(beta1)


# ---------------------------------------------------------------------------
# stopping-bound estimates


def prox_diameter_estimates(trace, omega):
    """Running maxima over visited iterates plus margin.

    Returns (Dhat_i^k per component, yhat^k) computed from the per-iteration
    prox values and dual norms stored in the trace.
    """
    if len(trace) == 0:
        raise ValueError("trace is empty")
    if not omega > 0:
        raise ValueError("omega must be positive")
    prox_max = np.array(trace[0].prox_values, dtype=float)
    y_max = trace[0].y_norm
    for rec in trace[1:]:
        prox_max = np.maximum(prox_max, rec.prox_values)
        y_max = max(y_max, rec.y_norm)
    return prox_max + omega, y_max + omega
