"""Benchmark problem families.

All randomness flows through numpy's PCG64 generator seeded explicitly, with
uniform reals drawn by the 53-bit mantissa convention, so every instance is
reproducible bit-for-bit from its seed.
"""

from __future__ import annotations

import numpy as np

from .problem import (
    ComponentSpec,
    ConvexQuadratic,
    LinearMinusLog,
    ProxFunction,
    SeparableProblem,
    WeightedAbs,
)

__all__ = [
    "generate_example1",
    "generate_random_allocation",
    "generate_strongly_convex",
    "desk_scale_family",
]


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def generate_example1():
    """The five-component scalar allocation instance with weighted absolute values.

    Component i (1-based) minimizes i * |x_i - i| on the box [-5, 7] and the
    components are coupled by x_1 + ... + x_5 = 10. The optimum is
    x* = (-4, 2, 3, 4, 5) with objective value 5.
    """
    comps = []
    for i in range(1, 6):
        comps.append(
            ComponentSpec(
                objective=WeightedAbs(w=[float(i)], a=[float(i)]),
                lower=np.array([-5.0]),
                upper=np.array([7.0]),
                block=None,
            )
        )
    return SeparableProblem(components=tuple(comps), b=np.array([10.0]), coupling="eq")


def generate_random_allocation(seed, M, n_x, force_linear=False):
    """Random nonlinear allocation instance: phi_i(x) = a_i^T x - w_i ln(1 + b_i^T x).

    Per component the draws are a_i ~ U[0,5]^n, b_i ~ U[0,10]^n, w_i ~ U[0,5]
    and an interior point t_i ~ U(0.1, 0.9)^n; the right-hand side b = sum_i t_i
    makes the instance feasible by construction. Boxes are [0,1]^n with
    identity coupling blocks (m = n_x). With ``force_linear`` the w draw is
    still consumed but zeroed, so the rest of the instance is unchanged.
    """
    if M < 2:
        raise ValueError("allocation family needs M >= 2")
    if n_x < 1:
        raise ValueError("n_x must be at least 1")
    rng = _rng(seed)
    comps = []
    b = np.zeros(n_x)
    lower = np.zeros(n_x)
    upper = np.ones(n_x)
    for _ in range(M):
        a = 5.0 * rng.random(n_x)
        bvec = 10.0 * rng.random(n_x)
        w = 5.0 * rng.random()
        if force_linear:
            w = 0.0
        t = 0.1 + 0.8 * rng.random(n_x)
        b += t
        comps.append(
            ComponentSpec(
                objective=LinearMinusLog(a=a, w=w, b=bvec),
                lower=lower.copy(),
                upper=upper.copy(),
                block=None,
            )
        )
    return SeparableProblem(components=tuple(comps), b=b, coupling="eq")


def generate_strongly_convex(seed, M, n_x, sigma_min=0.5):
    """Random strongly convex quadratic family for the dual-update scheme.

    Q_i = diag(d_i) + g_i g_i^T with d_i ~ U[sigma_min, sigma_min + 4]^n and
    g_i ~ U[0,1]^n, so lambda_min(Q_i) >= sigma_min; the recorded strong
    convexity is the exact smallest eigenvalue. Linear terms q_i ~ U[-2,2]^n,
    boxes [0,1]^n, identity blocks, and b = sum_i t_i with t_i ~ U(0.1, 0.9)^n.
    """
    if not sigma_min > 0:
        raise ValueError("sigma_min must be positive")
    rng = _rng(seed)
    comps = []
    b = np.zeros(n_x)
    for _ in range(M):
        d = sigma_min + 4.0 * rng.random(n_x)
        g = rng.random(n_x)
        Q = np.diag(d) + np.outer(g, g)
        qlin = -2.0 + 4.0 * rng.random(n_x)
        t = 0.1 + 0.8 * rng.random(n_x)
        b += t
        objective = ConvexQuadratic(Q=Q, q=qlin)
        comps.append(
            ComponentSpec(
                objective=objective,
                lower=np.zeros(n_x),
                upper=np.ones(n_x),
                block=None,
                sigma_phi=float(np.linalg.eigvalsh(Q)[0]),
            )
        )
    return SeparableProblem(components=tuple(comps), b=b, coupling="eq")


_DESK_SIZES = ((10, 5), (50, 5), (200, 5), (10, 20), (50, 20), (200, 20))


def desk_scale_family(seeds=range(10), sizes=_DESK_SIZES):
    """The default desk-scale benchmark family: one instance per seed, sizes cycling
    through M in {10, 50, 200} x n_x in {5, 20}. Returns (tag, problem) pairs."""
    out = []
    for j, seed in enumerate(seeds):
        M, n_x = sizes[j % len(sizes)]
        out.append((f"alloc_s{seed}_M{M}_n{n_x}", generate_random_allocation(seed, M, n_x)))
    return out
