"""Separable problem model: objectives, boxes, coupling blocks and derived constants.

A problem is a list of components, each with its own convex objective,
box feasible set, quadratic prox-function and coupling block ``A_i``,
tied together by a single linear constraint ``sum_i A_i x_i = b``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ProblemError",
    "DimensionMismatchError",
    "UnboundedBoxError",
    "NonpositiveProxScaleError",
    "DomainError",
    "SpectralNormError",
    "WeightedAbs",
    "LinearMinusLog",
    "ConvexQuadratic",
    "ZeroObjective",
    "ProxFunction",
    "ComponentSpec",
    "SeparableProblem",
    "SmoothingConstants",
    "build_problem",
    "problem_to_doc",
    "load_problem",
    "add_slack_component",
    "spectral_norm",
    "compute_constants",
]


class ProblemError(ValueError):
    """Base class for problem validation failures."""


class DimensionMismatchError(ProblemError):
    pass


class UnboundedBoxError(ProblemError):
    pass


class NonpositiveProxScaleError(ProblemError):
    pass


class DomainError(ProblemError):
    """A point lies outside an objective oracle's domain."""


class SpectralNormError(RuntimeError):
    """Power iteration failed to converge; carries the last estimate."""

    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


def _vec(x, name="vector"):
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise DimensionMismatchError(f"{name} must be one-dimensional, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# objective oracles


class WeightedAbs:
    """phi(x) = sum_j w_j * |x_j - a_j| with w >= 0. Nonsmooth."""

    kind = "weighted_abs"
    smooth = False
    strong_convexity = 0.0

    def __init__(self, w, a):
        self.w = _vec(w, "weighted_abs w")
        self.a = _vec(a, "weighted_abs a")
        if self.w.shape != self.a.shape:
            raise DimensionMismatchError("weighted_abs: w and a must have the same length")
        if np.any(self.w < 0):
            raise ProblemError("weighted_abs: weights must be nonnegative")

    @property
    def dim(self):
        return self.w.size

    def value(self, x):
        return float(self.w @ np.abs(x - self.a))

    def grad_lipschitz_on_box(self, lower, upper):
        return None

    def params_doc(self):
        return {"w": self.w.tolist(), "a": self.a.tolist()}


class LinearMinusLog:
    """phi(x) = a^T x - w * ln(1 + b^T x) with scalar w >= 0 and b >= 0 elementwise."""

    kind = "linear_minus_log"
    smooth = True
    strong_convexity = 0.0

    def __init__(self, a, w, b):
        self.a = _vec(a, "linear_minus_log a")
        self.b = _vec(b, "linear_minus_log b")
        self.w = float(w)
        if self.a.shape != self.b.shape:
            raise DimensionMismatchError("linear_minus_log: a and b must have the same length")
        if self.w < 0:
            raise ProblemError("linear_minus_log: weight must be nonnegative")
        if np.any(self.b < 0):
            raise ProblemError("linear_minus_log: b must be nonnegative elementwise")

    @property
    def dim(self):
        return self.a.size

    def _inner(self, x):
        s = 1.0 + float(self.b @ x)
        if s <= 0.0:
            raise DomainError("linear_minus_log: 1 + b^T x <= 0")
        return s

    def value(self, x):
        return float(self.a @ x) - self.w * np.log(self._inner(x))

    def grad(self, x):
        return self.a - (self.w / self._inner(x)) * self.b

    def grad_lipschitz_on_box(self, lower, upper):
        # Hessian is w * b b^T / (1 + b^T x)^2; with b >= 0 the denominator is
        # smallest at the lower box corner.
        s_min = 1.0 + float(self.b @ lower)
        if s_min <= 0.0:
            raise DomainError("linear_minus_log: box extends outside the log domain")
        return self.w * float(self.b @ self.b) / s_min**2


class ConvexQuadratic:
    """phi(x) = 0.5 x^T Q x + q^T x with Q symmetric positive semidefinite."""

    kind = "convex_quadratic"
    smooth = True

    def __init__(self, Q, q):
        self.Q = np.asarray(Q, dtype=float)
        self.q = _vec(q, "convex_quadratic q")
        n = self.q.size
        if self.Q.shape != (n, n):
            raise DimensionMismatchError("convex_quadratic: Q must be square and match q")
        self.Q = 0.5 * (self.Q + self.Q.T)
        self.diagonal = bool(np.all(self.Q == np.diag(np.diag(self.Q))))
        eigs = np.linalg.eigvalsh(self.Q) if not self.diagonal else np.sort(np.diag(self.Q))
        if eigs[0] < -1e-10 * max(1.0, abs(eigs[-1])):
            raise ProblemError("convex_quadratic: Q must be positive semidefinite")
        self.strong_convexity = float(max(eigs[0], 0.0))
        self._lmax = float(max(eigs[-1], 0.0))

    @property
    def dim(self):
        return self.q.size

    def value(self, x):
        return float(0.5 * x @ (self.Q @ x) + self.q @ x)

    def grad(self, x):
        return self.Q @ x + self.q

    def grad_lipschitz_on_box(self, lower, upper):
        return self._lmax

    def params_doc(self):
        return {"Q": self.Q.tolist(), "q": self.q.tolist()}


class ZeroObjective:
    """phi(x) = 0 (slack components)."""

    kind = "zero"
    smooth = True
    strong_convexity = 0.0

    def __init__(self, dim):
        self._dim = int(dim)

    @property
    def dim(self):
        return self._dim

    def value(self, x):
        return 0.0

    def grad(self, x):
        return np.zeros_like(x)

    def grad_lipschitz_on_box(self, lower, upper):
        return 0.0

    def params_doc(self):
        return {}


# ---------------------------------------------------------------------------
# prox function and component spec


@dataclass(frozen=True, eq=False)
class ProxFunction:
    """Quadratic prox-function p(x) = (rho/2) * ||x - center||^2.

    Strongly convex with parameter sigma = rho and p(center) = 0.
    """

    center: np.ndarray
    rho: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center, "prox center"))
        if not self.rho > 0:
            raise NonpositiveProxScaleError(f"prox scale must be positive, got {self.rho}")

    @property
    def sigma(self):
        return self.rho

    def value(self, x):
        d = x - self.center
        return 0.5 * self.rho * float(d @ d)

    def box_diameter(self, lower, upper):
        """max over the box of p(x), in closed form (farthest corner per coordinate)."""
        reach = np.maximum(upper - self.center, self.center - lower)
        return 0.5 * self.rho * float(reach @ reach)


@dataclass(frozen=True, eq=False)
class ComponentSpec:
    """One component: objective, box, coupling block, prox and convexity data.

    ``block`` is either an explicit dense (m, n_i) matrix or ``None`` for the
    identity tag (requires m == n_i, never materialized).
    """

    objective: object
    lower: np.ndarray
    upper: np.ndarray
    block: np.ndarray | None = None
    prox: ProxFunction | None = None
    sigma_phi: float = 0.0
    gradient_lipschitz: float | None = None

    def __post_init__(self):
        lower = _vec(self.lower, "box lower")
        upper = _vec(self.upper, "box upper")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if self.block is not None:
            object.__setattr__(self, "block", np.asarray(self.block, dtype=float))
        if self.prox is None:
            object.__setattr__(self, "prox", ProxFunction(center=0.5 * (lower + upper)))
        if self.gradient_lipschitz is None and self.objective.smooth:
            object.__setattr__(
                self, "gradient_lipschitz", self.objective.grad_lipschitz_on_box(lower, upper)
            )

    @property
    def dim(self):
        return self.lower.size

    def rows(self, m_hint=None):
        return self.block.shape[0] if self.block is not None else self.dim

    def apply_block(self, x):
        """A_i x without materializing identity tags."""
        return x if self.block is None else self.block @ x

    def apply_block_T(self, y):
        return y if self.block is None else self.block.T @ y

    def validate(self, index, m):
        i = index
        if self.objective.dim != self.dim:
            raise DimensionMismatchError(
                f"component {i}: objective dimension {self.objective.dim} != box dimension {self.dim}"
            )
        if self.lower.size != self.upper.size:
            raise DimensionMismatchError(f"component {i}: box bounds differ in length")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise UnboundedBoxError(f"component {i}: box bounds must be finite")
        if np.any(self.lower > self.upper):
            raise UnboundedBoxError(f"component {i}: lower bound exceeds upper bound")
        if self.block is None:
            if self.dim != m:
                raise DimensionMismatchError(
                    f"component {i}: identity block requires n_i == m ({self.dim} != {m})"
                )
        else:
            if self.block.ndim != 2 or self.block.shape != (m, self.dim):
                raise DimensionMismatchError(
                    f"component {i}: coupling block shape {self.block.shape} != ({m}, {self.dim})"
                )
        if self.prox.center.size != self.dim:
            raise DimensionMismatchError(f"component {i}: prox center has wrong length")
        if not self.prox.rho > 0:
            raise NonpositiveProxScaleError(f"component {i}: prox scale must be positive")
        if self.sigma_phi < 0:
            raise ProblemError(f"component {i}: sigma_phi must be nonnegative")
        if isinstance(self.objective, LinearMinusLog):
            if 1.0 + float(self.objective.b @ self.lower) <= 0.0:
                raise DomainError(f"component {i}: log argument nonpositive on the box")


# ---------------------------------------------------------------------------
# the assembled problem


@dataclass(frozen=True, eq=False)
class SeparableProblem:
    """Immutable separable problem: min sum_i phi_i(x_i) s.t. x_i in box_i, sum_i A_i x_i = b."""

    components: tuple
    b: np.ndarray
    coupling: str = "eq"  # "eq" | "le"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "b", _vec(self.b, "rhs b"))
        if len(self.components) < 1:
            raise ProblemError("problem needs at least one component")
        if self.coupling not in ("eq", "le"):
            raise ProblemError(f"unknown coupling kind {self.coupling!r}")
        m = self.b.size
        for i, comp in enumerate(self.components):
            comp.validate(i, m)
        dims = np.array([c.dim for c in self.components])
        object.__setattr__(self, "_offsets", np.concatenate(([0], np.cumsum(dims))))

    @property
    def M(self):
        return len(self.components)

    @property
    def m(self):
        return self.b.size

    @property
    def n(self):
        return int(self._offsets[-1])

    def split(self, x):
        """Views of the full vector x, one per component."""
        off = self._offsets
        return [x[off[i] : off[i + 1]] for i in range(self.M)]

    def prox_centers(self):
        return np.concatenate([c.prox.center for c in self.components])

    def box_lower(self):
        return np.concatenate([c.lower for c in self.components])

    def box_upper(self):
        return np.concatenate([c.upper for c in self.components])

    def clip_to_box(self, x):
        return np.clip(x, self.box_lower(), self.box_upper())

    def objective_value(self, x):
        """phi(x) = sum_i phi_i(x_i), accumulated in component order."""
        total = 0.0
        for comp, xi in zip(self.components, self.split(np.asarray(x, dtype=float))):
            total += comp.objective.value(xi)
        return total

    def residual(self, x):
        """A x - b, accumulated blockwise in fixed component order."""
        x = np.asarray(x, dtype=float)
        r = -self.b.copy()
        for comp, xi in zip(self.components, self.split(x)):
            r += comp.apply_block(xi)
        return r

    def prox_values(self, x):
        """p_i(x_i) for each component, as an array of length M."""
        return np.array(
            [c.prox.value(xi) for c, xi in zip(self.components, self.split(np.asarray(x, float)))]
        )

    def apply_blocks_T(self, y):
        """A^T y as a full primal vector (per-component A_i^T y stacked)."""
        return np.concatenate([c.apply_block_T(y) for c in self.components])


# ---------------------------------------------------------------------------
# document parsing / serialization

_OBJECTIVE_KINDS = {
    "weighted_abs": lambda p, dim: WeightedAbs(p["w"], p["a"]),
    "linear_minus_log": lambda p, dim: LinearMinusLog(p["a"], p["w"], p["b"]),
    "convex_quadratic": lambda p, dim: ConvexQuadratic(p["Q"], p["q"]),
    "zero": lambda p, dim: ZeroObjective(dim),
}


def build_problem(doc):
    """Build and validate a SeparableProblem from a parsed JSON document.

    Expected shape::

        {"components": [{"objective": {"kind": ..., "params": {...}},
                         "box": {"lower": [...], "upper": [...]},
                         "block": "identity" | {"dense": [[...]]},
                         "prox": {"rho": ...},
                         "sigma_phi": ...}, ...],
         "b": [...],
         "coupling": "eq" | "le"}
    """
    comps = []
    for i, cdoc in enumerate(doc["components"]):
        box = cdoc["box"]
        lower = _vec(box["lower"], f"component {i} lower")
        upper = _vec(box["upper"], f"component {i} upper")
        okind = cdoc["objective"]["kind"]
        if okind not in _OBJECTIVE_KINDS:
            raise ProblemError(f"component {i}: unknown objective kind {okind!r}")
        objective = _OBJECTIVE_KINDS[okind](cdoc["objective"].get("params", {}), lower.size)
        block_doc = cdoc.get("block", "identity")
        block = None if block_doc == "identity" else np.asarray(block_doc["dense"], dtype=float)
        rho = float(cdoc.get("prox", {}).get("rho", 1.0))
        if not rho > 0:
            raise NonpositiveProxScaleError(f"component {i}: prox scale must be positive, got {rho}")
        try:
            comps.append(
                ComponentSpec(
                    objective=objective,
                    lower=lower,
                    upper=upper,
                    block=block,
                    prox=ProxFunction(center=0.5 * (lower + upper), rho=rho),
                    sigma_phi=float(cdoc.get("sigma_phi", 0.0)),
                )
            )
        except ProblemError as exc:
            raise type(exc)(f"component {i}: {exc}") from exc
    return SeparableProblem(
        components=tuple(comps), b=_vec(doc["b"], "rhs b"), coupling=doc.get("coupling", "eq")
    )


def _objective_doc(obj):
    if isinstance(obj, LinearMinusLog):
        params = {"a": obj.a.tolist(), "w": obj.w, "b": obj.b.tolist()}
    else:
        params = obj.params_doc()
    return {"kind": obj.kind, "params": params}


def problem_to_doc(problem):
    """Serialize a problem back to the JSON document shape (inverse of build_problem)."""
    comps = []
    for c in problem.components:
        comps.append(
            {
                "objective": _objective_doc(c.objective),
                "box": {"lower": c.lower.tolist(), "upper": c.upper.tolist()},
                "block": "identity" if c.block is None else {"dense": c.block.tolist()},
                "prox": {"rho": c.prox.rho},
                "sigma_phi": c.sigma_phi,
            }
        )
    return {"components": comps, "b": problem.b.tolist(), "coupling": problem.coupling}


def load_problem(path):
    import json

    with open(path) as fh:
        return build_problem(json.load(fh))


# ---------------------------------------------------------------------------
# operations


def add_slack_component(problem):
    """Convert inequality coupling sum A_i x_i <= b into an equality by a slack component.

    The slack gets a zero objective, an identity block and the box
    [0, b - min over the box of A x], clipped at zero.
    """
    if problem.coupling == "eq":
        warnings.warn("add_slack_component called on an equality-coupled problem; no-op")
        return problem
    # elementwise minimum of A x over the box (interval arithmetic); for
    # identity blocks this is just the lower bound.
    ax_min = np.zeros(problem.m)
    for comp in problem.components:
        if comp.block is None:
            ax_min += comp.lower
        else:
            pos = np.clip(comp.block, 0.0, None)
            neg = np.clip(comp.block, None, 0.0)
            ax_min += pos @ comp.lower + neg @ comp.upper
    slack_upper = np.maximum(problem.b - ax_min, 0.0)
    slack = ComponentSpec(
        objective=ZeroObjective(problem.m),
        lower=np.zeros(problem.m),
        upper=slack_upper,
        block=None,
    )
    return SeparableProblem(
        components=problem.components + (slack,), b=problem.b.copy(), coupling="eq"
    )


def spectral_norm(block, rtol=1e-10, max_iter=10_000):
    """||A||_2 by power iteration on A^T A; the identity tag returns exactly 1."""
    if block is None:
        return 1.0
    a = np.asarray(block, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatchError("spectral_norm expects a matrix or identity tag")
    if not np.any(a):
        return 0.0
    # rescale so A^T A cannot under/overflow for extreme magnitudes
    scale = float(np.max(np.abs(a)))
    a = a / scale
    rng = np.random.default_rng(0)
    v = rng.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = a.T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # v fell in the null space; restart from a fresh direction
            v = rng.standard_normal(a.shape[1])
            v /= np.linalg.norm(v)
            continue
        new_est = np.sqrt(nw)
        v = w / nw
        if abs(new_est - est) <= rtol * new_est:
            return float(scale * new_est)
        est = new_est
    raise SpectralNormError(
        f"power iteration did not reach rtol={rtol} in {max_iter} iterations", scale * est
    )


@dataclass(frozen=True, eq=False)
class SmoothingConstants:
    """Derived Lipschitz data shared by all smoothing primitives.

    ``lbar`` is the M-scaled constant M * max_i ||A_i||^2 / sigma_i, and
    ``ratio_sum`` is sum_i ||A_i||^2 / sigma_i.
    """

    block_norms: np.ndarray
    sigmas: np.ndarray            # prox convexity parameters sigma_i
    sigma_phis: np.ndarray        # strong convexity of the objectives themselves
    prox_diameters: np.ndarray    # D_i
    lbar: float
    ratio_sum: float

    @property
    def M(self):
        return self.block_norms.size

    @property
    def sum_diameters(self):
        return float(self.prox_diameters.sum())

    def dual_lipschitz(self, beta1):
        """L^d(beta1): Lipschitz constant of the smoothed dual gradient."""
        return self.ratio_sum / beta1

    def psi_lipschitz(self, beta2):
        """Per-component L_i^psi(beta2) = M ||A_i||^2 / beta2, as an array."""
        return self.M * self.block_norms**2 / beta2

    def smooth_dual_grad_lipschitz(self):
        """L^phi = sum_i ||A_i||^2 / sigma_phi_i; defined only for strongly convex objectives."""
        if np.any(self.sigma_phis <= 0):
            raise ProblemError("objective not strongly convex")
        return float(np.sum(self.block_norms**2 / self.sigma_phis))


def compute_constants(problem):
    """All structural constants the algorithms need, computed once per problem."""
    norms = np.array([spectral_norm(c.block) for c in problem.components])
    sigmas = np.array([c.prox.sigma for c in problem.components])
    sigma_phis = np.array([c.sigma_phi for c in problem.components])
    diameters = np.array(
        [c.prox.box_diameter(c.lower, c.upper) for c in problem.components]
    )
    ratios = norms**2 / sigmas
    return SmoothingConstants(
        block_norms=norms,
        sigmas=sigmas,
        sigma_phis=sigma_phis,
        prox_diameters=diameters,
        lbar=float(problem.M * ratios.max()),
        ratio_sum=float(ratios.sum()),
    )
