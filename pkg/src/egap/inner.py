"""Per-component subproblem solver.

Every smoothing primitive reduces to the same normal form per component:

    min over the box of  phi_i(x) + lin^T x + (q/2) * ||x - z||^2

which is strongly convex whenever q > 0 or phi_i itself is strongly convex,
so the minimizer is unique. Closed forms are used for weighted absolute
values, zero objectives, diagonal quadratics and the linear-minus-log family
(via a one-dimensional dual root); projected gradient covers the rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import (
    ConvexQuadratic,
    LinearMinusLog,
    WeightedAbs,
    ZeroObjective,
)

__all__ = [
    "SubproblemSpec",
    "InnerSolveError",
    "solve",
    "solve_weighted_abs_closed_form",
    "solve_linear_minus_log",
    "solve_linear_minus_log_batch",
    "projected_gradient_solve",
]

PG_MAX_ITER = 100_000


class InnerSolveError(RuntimeError):
    """Iterative fallback missed its tolerance; carries the best iterate found."""

    def __init__(self, message, best_x, achieved):
        super().__init__(message)
        self.best_x = best_x
        self.achieved = achieved


@dataclass(frozen=True, eq=False)
class SubproblemSpec:
    """Normal form min phi(x) + lin^T x + (q/2)||x - z||^2 over [lower, upper]."""

    objective: object
    lin: np.ndarray
    q: float
    z: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("quadratic weight must be nonnegative")
        if self.q == 0 and self.objective.strong_convexity <= 0:
            raise ValueError("subproblem is not strongly convex (q = 0 and sigma_phi = 0)")

    def model_value(self, x):
        d = x - self.z
        return self.objective.value(x) + float(self.lin @ x) + 0.5 * self.q * float(d @ d)


def solve_weighted_abs_closed_form(w, a, lin, q, z, lower, upper):
    """Exact minimizer of sum_j [w_j|x_j - a_j| + lin_j x_j + (q/2)(x_j - z_j)^2] on the box.

    Works coordinatewise: soft-threshold against the kink at a_j, then clip.
    All arguments may be scalars or equal-length arrays.
    """
    w = np.asarray(w, dtype=float)
    a = np.asarray(a, dtype=float)
    x_above = z - (lin + w) / q  # candidate on the x > a branch
    x_below = z - (lin - w) / q  # candidate on the x < a branch
    x = np.where(x_above > a, x_above, np.where(x_below < a, x_below, a))
    return np.clip(x, lower, upper)


def _clip_quadratic(lin, q, z, lower, upper):
    return np.clip(z - lin / q, lower, upper)


def _diag_quadratic(diag, qlin, lin, q, z, lower, upper):
    return np.clip((q * z - lin - qlin) / (diag + q), lower, upper)


def solve_linear_minus_log(obj, lin, q, z, lower, upper):
    """Exact minimizer for phi(x) = a^T x - w ln(1 + b^T x) plus the quadratic model.

    The KKT system decouples once the scalar mu = -w / (1 + b^T x) is known:
    x(mu) = clip(z - (a + lin + mu*b)/q). h(mu) = -w/(1 + b^T x(mu)) - mu is
    strictly decreasing, so the root is found by bisection (fixed iteration
    count, deterministic).
    """
    if obj.w == 0.0:
        return _clip_quadratic(obj.a + lin, q, z, lower, upper)
    c = obj.a + lin
    b = obj.b
    s_lo = 1.0 + float(b @ lower)
    s_hi = 1.0 + float(b @ upper)
    mu_lo = -obj.w / s_lo
    mu_hi = -obj.w / s_hi
    for _ in range(90):
        mu = 0.5 * (mu_lo + mu_hi)
        x = np.clip(z - (c + mu * b) / q, lower, upper)
        h = -obj.w / (1.0 + float(b @ x)) - mu
        if h > 0.0:
            mu_lo = mu
        else:
            mu_hi = mu
    mu = 0.5 * (mu_lo + mu_hi)
    return np.clip(z - (c + mu * b) / q, lower, upper)


def solve_linear_minus_log_batch(a, w, b, lin, q, z, lower, upper):
    """Vectorized variant of solve_linear_minus_log for M stacked components.

    a, b, lin, z, lower, upper have shape (M, n); w and q have shape (M,)
    (q may also be scalar). Returns the (M, n) stack of minimizers. Components
    with w = 0 reduce to the clipped quadratic and are handled by the same
    bisection (their mu bracket collapses to {0}).
    """
    q = np.broadcast_to(np.asarray(q, dtype=float), w.shape)[:, None]
    c = a + lin
    s_lo = 1.0 + np.sum(b * lower, axis=1)
    s_hi = 1.0 + np.sum(b * upper, axis=1)
    mu_lo = -w / s_lo
    mu_hi = -w / s_hi
    for _ in range(90):
        mu = 0.5 * (mu_lo + mu_hi)
        x = np.clip(z - (c + mu[:, None] * b) / q, lower, upper)
        h = -w / (1.0 + np.sum(b * x, axis=1)) - mu
        above = h > 0.0
        mu_lo = np.where(above, mu, mu_lo)
        mu_hi = np.where(above, mu_hi, mu)
    mu = 0.5 * (mu_lo + mu_hi)
    return np.clip(z - (c + mu[:, None] * b) / q, lower, upper)


def projected_gradient_solve(spec, tolerance, max_iter=PG_MAX_ITER):
    """Projected gradient fallback for smooth objectives without a closed form.

    Constant step 1/(L_grad + q); stops when the gradient-mapping norm drops
    below sigma_eff * tolerance, which bounds the distance to the minimizer by
    the strong convexity modulus sigma_eff = q + sigma_phi.
    """
    obj = spec.objective
    lip = obj.grad_lipschitz_on_box(spec.lower, spec.upper)
    if lip is None:
        raise ValueError(f"objective kind {obj.kind!r} is not differentiable")
    total_lip = lip + spec.q
    sigma_eff = spec.q + obj.strong_convexity
    step = 1.0 / total_lip
    x = np.clip(spec.z, spec.lower, spec.upper)
    fx = spec.model_value(x)
    target = sigma_eff * tolerance
    for _ in range(max_iter):
        g = obj.grad(x) + spec.lin + spec.q * (x - spec.z)
        x_new = np.clip(x - step * g, spec.lower, spec.upper)
        mapping_norm = total_lip * np.linalg.norm(x - x_new)
        if mapping_norm <= target:
            return x_new
        f_new = spec.model_value(x_new)
        if f_new > fx + 1e-12 * (1.0 + abs(fx)):
            raise InnerSolveError(
                "projected gradient produced an ascent step", x, mapping_norm
            )
        x, fx = x_new, f_new
    raise InnerSolveError(
        f"projected gradient did not reach tolerance {tolerance} in {max_iter} iterations",
        x,
        mapping_norm,
    )


def solve(spec, tolerance=1e-11):
    """Solve the normal-form subproblem to within ``tolerance`` of the exact minimizer.

    Dispatches to closed forms where available, projected gradient otherwise.
    """
    obj = spec.objective
    if isinstance(obj, WeightedAbs):
        return solve_weighted_abs_closed_form(
            obj.w, obj.a, spec.lin, spec.q, spec.z, spec.lower, spec.upper
        )
    if isinstance(obj, ZeroObjective):
        return _clip_quadratic(spec.lin, spec.q, spec.z, spec.lower, spec.upper)
    if isinstance(obj, LinearMinusLog):
        return solve_linear_minus_log(obj, spec.lin, spec.q, spec.z, spec.lower, spec.upper)
    if isinstance(obj, ConvexQuadratic) and obj.diagonal:
        return _diag_quadratic(
            np.diag(obj.Q), obj.q, spec.lin, spec.q, spec.z, spec.lower, spec.upper
        )
    return projected_gradient_solve(spec, tolerance)
