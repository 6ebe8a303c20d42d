import numpy as np
import pytest

from egap.generators import generate_example1, generate_strongly_convex
from egap.problem import (
    ComponentSpec,
    ConvexQuadratic,
    SeparableProblem,
    WeightedAbs,
    ZeroObjective,
)
from egap.reference import brute_force_tiny, reference_solve
from egap.smoothing import smoothed_dual

from _oracles import kkt_box_equality_quadratic


def scalar_abs_problem(weights, kinks, b, lo=-1.0, hi=1.0):
    comps = tuple(
        ComponentSpec(
            objective=WeightedAbs(w=[w], a=[a]), lower=np.array([lo]), upper=np.array([hi])
        )
        for w, a in zip(weights, kinks)
    )
    return SeparableProblem(components=comps, b=np.array([float(b)]), coupling="eq")


class TestReferenceSolve:
    def test_example1(self):
        p = generate_example1()
        ref = reference_solve(p, tol=1e-6)
        assert ref.x_star == pytest.approx([-4.0, 2.0, 3.0, 4.0, 5.0], abs=1e-5)
        assert ref.phi_star == pytest.approx(5.0, abs=1e-5)
        d_at_y = smoothed_dual(p, ref.y_star, 1e-9).value
        assert abs(ref.phi_star - d_at_y) <= 1e-6

    def test_zero_objective_feasible_centers(self):
        comps = tuple(
            ComponentSpec(
                objective=ZeroObjective(1), lower=np.array([0.0]), upper=np.array([2.0])
            )
            for _ in range(3)
        )
        p = SeparableProblem(components=comps, b=np.array([3.0]), coupling="eq")
        ref = reference_solve(p, tol=1e-8)
        assert ref.phi_star == pytest.approx(0.0, abs=1e-8)
        assert np.linalg.norm(p.residual(ref.x_star)) <= 1e-8
        assert np.linalg.norm(ref.y_star) <= 1e-6

    def test_strongly_convex_quadratic_matches_kkt_enumeration(self):
        # three 2-d components with identity blocks: n = 6, m = 2
        p = generate_strongly_convex(13, 3, 2)
        ref = reference_solve(p, tol=1e-8)
        n, m = p.n, p.m
        Q = np.zeros((n, n))
        qlin = np.zeros(n)
        A = np.zeros((m, n))
        for i, comp in enumerate(p.components):
            sl = slice(2 * i, 2 * i + 2)
            Q[sl, sl] = comp.objective.Q
            qlin[sl] = comp.objective.q
            A[:, sl] = np.eye(2)
        x_kkt, y_kkt, val = kkt_box_equality_quadratic(
            Q, qlin, A, p.b, p.box_lower(), p.box_upper()
        )
        assert ref.x_star == pytest.approx(x_kkt, abs=1e-8)
        assert ref.phi_star == pytest.approx(val, abs=1e-8)
        assert ref.y_star == pytest.approx(y_kkt, abs=1e-6)

    def test_certificate_fields(self):
        p = generate_example1()
        ref = reference_solve(p, tol=1e-6)
        assert np.linalg.norm(p.residual(ref.x_star)) <= ref.certified_tolerance
        assert ref.method in (
            "golden-coordinate-ascent", "subgradient-ascent", "exact-dual-ascent"
        )

    def test_local_maximality_probe(self):
        p = generate_example1()
        ref = reference_solve(p, tol=1e-6)
        d_star = smoothed_dual(p, ref.y_star, 1e-9).value
        rng = np.random.default_rng(20)
        for _ in range(1000):
            delta = rng.uniform(-1, 1, p.m)
            nrm = np.linalg.norm(delta)
            if nrm > 1.0:
                delta /= nrm
            d_pert = smoothed_dual(p, ref.y_star + delta, 1e-9).value
            assert d_pert <= d_star + ref.certified_tolerance


class TestBruteForce:
    def test_two_component_scalar(self):
        p = scalar_abs_problem([1.0, 1.0], [0.0, 1.0], b=1.0)
        x, phi = brute_force_tiny(p, grid_step=0.25)
        assert phi == pytest.approx(0.0, abs=1e-9)
        assert x == pytest.approx([0.0, 1.0], abs=1e-6)

    def test_example1_truncated_agrees_with_reference(self):
        p = scalar_abs_problem([1.0, 2.0], [1.0, 2.0], b=3.0, lo=-5.0, hi=7.0)
        grid_step = 0.1
        x, phi = brute_force_tiny(p, grid_step=grid_step)
        ref = reference_solve(p, tol=1e-6)
        assert abs(phi - ref.phi_star) <= 2 * grid_step + 1e-6

    def test_infeasible_instance_raises(self):
        p = scalar_abs_problem([1.0, 1.0], [1.0, 2.0], b=100.0, lo=-5.0, hi=7.0)
        with pytest.raises(ValueError, match="near-feasible"):
            brute_force_tiny(p, grid_step=0.5)

    def test_dimension_cap(self):
        p = generate_example1()  # n = 5 > 4
        with pytest.raises(ValueError, match="n <= 4"):
            brute_force_tiny(p, grid_step=0.5)


class TestAgreementCorpus:
    def corpus(self):
        instances = []
        instances.append(("abs2", scalar_abs_problem([1.0, 1.0], [0.0, 1.0], b=1.0), 0.25))
        instances.append(
            ("abs2-wide", scalar_abs_problem([1.0, 2.0], [1.0, 2.0], b=3.0, lo=-5.0, hi=7.0), 0.2)
        )
        instances.append(
            ("abs3", scalar_abs_problem([1.0, 2.0, 3.0], [1.0, 0.0, -1.0], b=0.5), 0.25)
        )
        instances.append(
            ("abs4", scalar_abs_problem([2.0, 1.0, 1.0, 3.0], [0.5, -0.5, 0.0, 1.0], b=1.0), 0.25)
        )
        comps = tuple(
            ComponentSpec(
                objective=ZeroObjective(1), lower=np.array([0.0]), upper=np.array([1.0])
            )
            for _ in range(3)
        )
        instances.append(
            ("zero3", SeparableProblem(components=comps, b=np.array([1.2]), coupling="eq"), 0.2)
        )
        for seed, M in ((1, 2), (2, 3), (3, 4), (4, 2)):
            instances.append(
                (f"quad{seed}", generate_strongly_convex(seed, M, 1, sigma_min=1.0), 0.2)
            )
        q2 = generate_strongly_convex(9, 2, 2, sigma_min=1.0)
        instances.append(("quad2d", q2, 0.25))
        return instances

    def test_reference_matches_brute_force_on_tiny_corpus(self):
        corpus = self.corpus()
        assert len(corpus) == 10
        for tag, p, step in corpus:
            tol = 1e-6
            ref = reference_solve(p, tol=tol)
            _, phi_bf = brute_force_tiny(p, grid_step=step)
            assert abs(ref.phi_star - phi_bf) <= 2 * step + tol, tag
