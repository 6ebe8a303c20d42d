"""Independent high-accuracy reference solutions for tests and bound constants.

This module is deliberately built apart from the excessive-gap schemes: the
dual is maximized by golden-section coordinate ascent (or plain subgradient
ascent, or accelerated ascent on the exact dual in the strongly convex case),
and the primal is recovered by an augmented Lagrangian refinement. Every
returned solution carries a checked certificate; tests must not proceed on an
uncertified reference.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .problem import compute_constants
from .smoothing import _solve_components, exact_dual, smoothed_dual

__all__ = ["ReferenceSolution", "CertificationError", "reference_solve", "brute_force_tiny"]

DUAL_SMOOTHING = 1e-9  # proxy for the nonsmooth dual in certificates


class CertificationError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    x_star: np.ndarray
    y_star: np.ndarray
    phi_star: float
    certified_tolerance: float
    method: str


# ---------------------------------------------------------------------------
# dual maximization


def _golden_max(fn, lo, hi, xtol):
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def _coordinate_ascent(fn_of_y, y0, sweeps, xtol):
    """Cyclic per-coordinate golden-section ascent on a concave function."""
    y = np.asarray(y0, dtype=float).copy()
    for _ in range(sweeps):
        moved = 0.0
        for j in range(y.size):
            def slice_fn(t, j=j):
                yt = y.copy()
                yt[j] = t
                return fn_of_y(yt)

            center = y[j]
            radius = 1.0
            f_center = slice_fn(center)
            for _ in range(60):
                if slice_fn(center - radius) <= f_center and slice_fn(center + radius) <= f_center:
                    break
                radius *= 2.0
            t_new = _golden_max(slice_fn, center - radius, center + radius, xtol)
            moved = max(moved, abs(t_new - y[j]))
            y[j] = t_new
        if moved <= xtol:
            break
    return y


def _subgradient_ascent(problem, beta, y0, iters, inner_tol):
    y = np.asarray(y0, dtype=float).copy()
    best_y, best_d = y.copy(), -math.inf
    for j in range(iters):
        ev = smoothed_dual(problem, y, beta, inner_tol)
        if ev.value > best_d:
            best_d, best_y = ev.value, y.copy()
        gnorm = np.linalg.norm(ev.gradient)
        if gnorm == 0.0:
            break
        y = y + (1.0 / math.sqrt(j + 1.0)) * ev.gradient / gnorm
    return best_y


def _ascend_exact_dual(problem, constants, tol, inner_tol, max_iter=100_000):
    """Accelerated gradient ascent on d(y) for strongly convex objectives."""
    lphi = constants.smooth_dual_grad_lipschitz()
    m = problem.m
    y = np.zeros(m)
    w = y.copy()
    t = 1.0
    for _ in range(max_iter):
        ev = exact_dual(problem, w, inner_tol)
        if np.linalg.norm(ev.gradient) <= tol / (1.0 + np.linalg.norm(w)):
            return w, ev
        y_next = w + ev.gradient / lphi
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if float(ev.gradient @ (y_next - y)) < 0.0:
            t_next = 1.0  # adaptive restart
        w = y_next + ((t - 1.0) / t_next) * (y_next - y)
        y, t = y_next, t_next
    raise CertificationError("exact-dual ascent did not reach its gradient target")


# ---------------------------------------------------------------------------
# augmented Lagrangian primal refinement


def _al_minimize(problem, constants, x0, y, mu, inner_tol, max_iter=4000):
    """Proximal-gradient minimization of phi(x) + y^T(Ax-b) + ||Ax-b||^2/(2 mu)."""
    q = constants.psi_lipschitz(mu)
    x = np.asarray(x0, dtype=float)
    for _ in range(max_iter):
        u = y + problem.residual(x) / mu
        x_new = _solve_components(problem, u, q, x, inner_tol, 1)
        if np.max(np.abs(x_new - x)) <= 1e-13 * (1.0 + np.max(np.abs(x))):
            return x_new
        x = x_new
    return x


def _alm_refine(problem, constants, x0, y0, feas_tol, inner_tol, max_outer=80):
    """Multiplier iterations with penalty tightening; returns (x, y)."""
    x = np.asarray(x0, dtype=float).copy()
    y = np.asarray(y0, dtype=float).copy()
    mu = 1.0
    prev_feas = math.inf
    best = (x, y, prev_feas)
    for _ in range(max_outer):
        x = _al_minimize(problem, constants, x, y, mu, inner_tol)
        r = problem.residual(x)
        feas = float(np.linalg.norm(r))
        if feas < best[2]:
            best = (x.copy(), y.copy(), feas)
        if feas <= feas_tol:
            return x, y
        y = y + r / mu
        if feas > 0.5 * prev_feas:
            mu *= 0.25
        prev_feas = feas
    return best[0], best[1]


# ---------------------------------------------------------------------------
# operations


def reference_solve(problem, tol=1e-6, inner_tol=1e-12):
    """High-accuracy (x*, y*, phi*) with a feasibility + duality-gap certificate.

    Raises CertificationError when the certificate cannot be established; the
    reported certified tolerance includes the dual-smoothing error
    beta * sum_i D_i of the nonsmooth-dual proxy.
    """
    constants = compute_constants(problem)
    if np.all(constants.sigma_phis > 0):
        y_ref, ev = _ascend_exact_dual(problem, constants, tol, inner_tol)
        x = ev.minimizers
        d_ref = ev.value
        smoothing_err = 0.0
        method = "exact-dual-ascent"
    else:
        beta = DUAL_SMOOTHING

        def d_of(y):
            return smoothed_dual(problem, y, beta, inner_tol).value

        if problem.m <= 2:
            y_dual = _coordinate_ascent(d_of, np.zeros(problem.m), sweeps=40, xtol=1e-11)
            method = "golden-coordinate-ascent"
        else:
            y_sub = _subgradient_ascent(problem, beta, np.zeros(problem.m), 2000, inner_tol)
            y_dual = _coordinate_ascent(d_of, y_sub, sweeps=6, xtol=1e-9)
            method = "subgradient-ascent"
        x0 = smoothed_dual(problem, y_dual, beta, inner_tol).minimizers
        x, y_alm = _alm_refine(problem, constants, x0, y_dual, 0.3 * tol, inner_tol)
        candidates = [y_dual, y_alm]
        d_vals = [d_of(y) for y in candidates]
        pick = int(np.argmax(d_vals))
        y_ref, d_ref = candidates[pick], d_vals[pick]
        smoothing_err = beta * constants.sum_diameters
    phi = problem.objective_value(x)
    feas = float(np.linalg.norm(problem.residual(x)))
    gap = abs(phi - d_ref)
    if feas > tol or gap > tol:
        raise CertificationError(
            f"reference certificate failed: feasibility {feas:.3e}, duality gap {gap:.3e} "
            f"(target {tol:.1e})"
        )
    return ReferenceSolution(
        x_star=x,
        y_star=np.asarray(y_ref, float),
        phi_star=phi,
        certified_tolerance=max(feas, gap) + smoothing_err,
        method=method,
    )


def brute_force_tiny(problem, grid_step):
    """Exhaustive near-feasible grid search plus a local polish; n <= 4 only.

    Grid points within ||Ax - b|| <= grid_step * n are kept; the best one is
    refined by a short augmented Lagrangian run. Raises when no grid point is
    near-feasible.
    """
    if problem.n > 4:
        raise ValueError("brute force only supports n <= 4")
    constants = compute_constants(problem)
    lower = problem.box_lower()
    upper = problem.box_upper()
    axes = []
    for lo, hi in zip(lower, upper):
        if hi - lo < 1e-15:
            axes.append(np.array([lo]))
        else:
            count = int(round((hi - lo) / grid_step)) + 1
            axes.append(np.linspace(lo, hi, max(count, 2)))
    feas_tol = grid_step * problem.n
    best_x, best_phi = None, math.inf
    for point in itertools.product(*axes):
        x = np.array(point)
        if np.linalg.norm(problem.residual(x)) > feas_tol:
            continue
        phi = problem.objective_value(x)
        if phi < best_phi:
            best_phi, best_x = phi, x
    if best_x is None:
        raise ValueError("no near-feasible grid point; instance may be infeasible")
    x, _ = _alm_refine(
        problem, constants, best_x, np.zeros(problem.m), 1e-9, 1e-12, max_outer=40
    )
    return x, problem.objective_value(x)
