import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import egap.algorithms as alg
from egap.algorithms import (
    ConfigurationError,
    InvariantViolationError,
    ScheduleConditionError,
    SolverConfig,
    StopDecision,
    initial_point_dual,
    initial_point_primal,
    run,
    run_baseline_fixed,
    step_Ad,
    step_Ads,
    step_Ap,
    step_Apm,
    stopping_check,
    tau_next_alg1,
    tau_next_alg2,
    xi_comparison,
)
from egap.generators import (
    generate_example1,
    generate_random_allocation,
    generate_strongly_convex,
)
from egap.problem import (
    ComponentSpec,
    SeparableProblem,
    ZeroObjective,
    compute_constants,
)
from egap.reference import reference_solve
from egap.smoothing import exact_dual, penalty_eval, smoothed_dual

SQRT5 = math.sqrt(5.0)


class TestTauSchedules:
    def test_alg1_single_step(self):
        assert tau_next_alg1(0.499) == pytest.approx(0.499 / 1.499, rel=1e-15)
        assert tau_next_alg1(0.5) == pytest.approx(1.0 / 3.0, rel=1e-15)

    def test_alg1_closed_form_after_k_steps(self):
        tau = 0.499
        for _ in range(10):
            tau = tau_next_alg1(tau)
        assert tau == pytest.approx(0.499 / (1 + 0.499 * 10), rel=1e-14)

    def test_alg1_closed_form_long_horizon(self):
        tau = 0.499
        for k in range(1, 10_001):
            tau = tau_next_alg1(tau)
            if k % 1000 == 0:
                assert tau == pytest.approx(0.499 / (1 + 0.499 * k), rel=1e-12)

    def test_alg2_root_identity(self):
        t = tau_next_alg2(0.998)
        # the update solves t^2 + tau^2 t - tau^2 = 0 exactly
        assert abs(t * t + 0.998**2 * t - 0.998**2) <= 1e-12
        assert 0 < t < 0.998

    def test_alg2_ratio_tends_to_one(self):
        for tau in (1e-4, 1e-6, 1e-8):
            assert tau_next_alg2(tau) / tau == pytest.approx(1.0, abs=1e-3)

    def test_alg2_tau_sandwich(self):
        tau0 = 0.998
        tau = tau0
        for k in range(1, 1001):
            tau = tau_next_alg2(tau)
            assert tau0 / (1 + 2 * tau0 * k) < tau < 2 * tau0 / (2 + tau0 * k)

    def test_beta_closed_form_alg1(self):
        # under the solver-loop order beta_{k+1} = (1 - tau_k) beta_k the
        # telescoped product gives beta0 (1 - tau0) / (1 + tau0 (k-1)); the
        # frequently quoted beta0 / (tau0 k + 1) is an upper bound on it
        # (exact under the shifted convention beta_{k+1} = (1 - tau_{k+1}) beta_k)
        beta = 3.7
        tau = 0.499
        for k in range(1, 10_001):
            beta = (1 - tau) * beta
            tau = tau_next_alg1(tau)
            if k % 500 == 0 or k < 10:
                assert beta == pytest.approx(
                    3.7 * (1 - 0.499) / (1 + 0.499 * (k - 1)), rel=1e-12
                )
                assert beta <= 3.7 / (0.499 * k + 1) + 1e-15

    def test_beta_closed_form_shifted_convention(self):
        beta = 3.7
        tau = 0.499
        for k in range(1, 10_001):
            tau = tau_next_alg1(tau)
            beta = (1 - tau) * beta
            if k % 500 == 0 or k < 10:
                assert beta == pytest.approx(3.7 / (0.499 * k + 1), rel=1e-12)

    def test_interleaved_beta_sandwich(self):
        tau0 = 0.998
        bbar = SQRT5
        tau, b1, b2 = tau0, bbar, bbar
        for k in range(1, 1001):
            if (k - 1) % 2 == 0:
                b1 *= 1 - tau
            else:
                b2 *= 1 - tau
            tau = tau_next_alg2(tau)
            assert (1 - tau0) * bbar / (2 * tau0 * k + 1) < b1
            assert b1 < 2 * bbar * math.sqrt(1 - tau0) / (tau0 * k)
            assert bbar * math.sqrt(1 - tau0) / (2 * tau0 * k + 1) < b2
            assert b2 < 2 * bbar / (tau0 * k)


class TestXiComparison:
    def test_values_at_half(self):
        xi1, xi2 = xi_comparison(0.5)
        assert xi1 == pytest.approx(1.0 / 3.0, rel=1e-15)
        assert xi2 == pytest.approx(0.25 * (math.sqrt(4.25) - 0.5), rel=1e-15)
        assert xi1 < xi2 < 2 * xi1

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=1e-9, max_value=1.0, exclude_max=True))
    def test_strict_ordering(self, tau):
        xi1, xi2 = xi_comparison(tau)
        assert xi1 < xi2 < 2 * xi1

    def test_limits_at_one(self):
        xi1, xi2 = xi_comparison(1.0 - 1e-12)
        assert xi1 == pytest.approx(0.5, abs=1e-9)
        assert xi2 == pytest.approx((math.sqrt(5.0) - 1.0) / 2.0, abs=1e-9)


class TestInitialPoints:
    def test_example1_primal(self):
        p = generate_example1()
        c = compute_constants(p)
        x0, y0 = initial_point_primal(p, c, SQRT5, SQRT5)
        assert y0 == pytest.approx([-SQRT5])
        f0 = penalty_eval(p, x0, SQRT5).f_value
        d0 = smoothed_dual(p, y0, SQRT5).value
        assert f0 <= d0 + 1e-8 * (1 + abs(d0))

    def test_example1_dual(self):
        p = generate_example1()
        c = compute_constants(p)
        x0, y0 = initial_point_dual(p, c, SQRT5, SQRT5)
        f0 = penalty_eval(p, x0, SQRT5).f_value
        d0 = smoothed_dual(p, y0, SQRT5).value
        assert f0 <= d0 + 1e-8 * (1 + abs(d0))

    def feasible_center_problem(self):
        comps = tuple(
            ComponentSpec(
                objective=ZeroObjective(1), lower=np.array([0.0]), upper=np.array([2.0])
            )
            for _ in range(3)
        )
        return SeparableProblem(components=comps, b=np.array([3.0]), coupling="eq")

    def test_feasible_center_gives_zero_multiplier(self):
        p = self.feasible_center_problem()
        c = compute_constants(p)
        x0, y0 = initial_point_primal(p, c, 2.0, 2.0)
        assert y0 == pytest.approx([0.0])
        assert x0 == pytest.approx(p.prox_centers())

    def test_dual_init_zero_when_minimizers_feasible(self):
        p = self.feasible_center_problem()
        c = compute_constants(p)
        x0, y0 = initial_point_dual(p, c, 2.0, 2.0)
        assert y0 == pytest.approx([0.0])

    def test_dual_init_tiny_beta1_keeps_anchor(self):
        p = generate_example1()
        c = compute_constants(p)
        beta1 = 1e-9  # L^d huge, step 1/L^d -> 0
        x0, y0 = initial_point_dual(p, c, beta1, 1e9)
        assert np.abs(y0) <= 1e-8


class TestSteps:
    def test_apm_tiny_tau_barely_moves(self):
        p = generate_example1()
        c = compute_constants(p)
        x0, y0 = initial_point_primal(p, c, SQRT5, SQRT5)
        tau = 1e-12
        x1, y1, b1, b2 = step_Apm(p, c, x0, y0, SQRT5, SQRT5, tau)
        ev = smoothed_dual(p, y0, SQRT5)
        # x_hat ~ x0, y+ ~ y0; the proximal map is applied at ~x0
        assert np.max(np.abs(y1 - y0)) <= 1e-9
        assert b1 == pytest.approx(SQRT5 * (1 - tau))

    def test_apm_maintains_gap_on_first_step(self):
        p = generate_example1()
        c = compute_constants(p)
        x0, y0 = initial_point_primal(p, c, SQRT5, SQRT5)
        x1, y1, b1, b2 = step_Apm(p, c, x0, y0, SQRT5, SQRT5, 0.499)
        f1 = penalty_eval(p, x1, b2).f_value
        d1 = smoothed_dual(p, y1, b1).value
        assert f1 <= d1 + 1e-8 * (1 + abs(d1))

    def test_apm_from_reference_saddle(self):
        p = generate_example1()
        c = compute_constants(p)
        ref = reference_solve(p, tol=1e-6)
        beta1 = beta2 = 0.7  # satisfies the product condition at tau = 0.2
        tau = 0.2
        x, y = ref.x_star.copy(), ref.y_star.copy()
        surrogates = []
        for _ in range(5):
            d = smoothed_dual(p, y, beta1).value
            surrogates.append(p.objective_value(x) - d)
            f = penalty_eval(p, x, beta2).f_value
            assert f <= d + 1e-8 * (1 + abs(d))
            x, y, beta1, beta2 = step_Apm(p, c, x, y, beta1, beta2, tau)
            tau = tau_next_alg1(tau)
        # started at the saddle, dual dominance is never broken
        assert all(s <= 1e-9 for s in surrogates)

    def test_apm_schedule_condition_error(self):
        p = generate_example1()
        c = compute_constants(p)
        x0, y0 = initial_point_primal(p, c, SQRT5, SQRT5)
        with pytest.raises(ScheduleConditionError):
            step_Apm(p, c, x0, y0, 1e-6, 1e-6, 0.499)

    def test_ap_tiny_tau_only_rescales_beta1(self):
        p = generate_example1()
        c = compute_constants(p)
        x0, y0 = initial_point_primal(p, c, SQRT5, SQRT5)
        tau = 1e-12
        x1, y1, b1, b2, _ = step_Ap(p, c, x0, y0, SQRT5, SQRT5, tau)
        assert np.max(np.abs(y1 - y0)) <= 1e-9
        assert b2 == SQRT5
        assert b1 == pytest.approx(SQRT5 * (1 - tau))

    def test_switching_steps_maintain_gap_within_valid_tau(self):
        p = generate_example1()
        c = compute_constants(p)
        x, y = initial_point_dual(p, c, SQRT5, SQRT5)
        b1 = b2 = SQRT5
        tau = 0.6
        warned = False
        for k in range(2):
            if k % 2 == 0:
                x, y, b1, b2, warned = step_Ap(p, c, x, y, b1, b2, tau, warned=warned)
            else:
                x, y, b1, b2, warned = step_Ad(p, c, x, y, b1, b2, tau, warned=warned)
            f = penalty_eval(p, x, b2).f_value
            d = smoothed_dual(p, y, b1).value
            assert f <= d + 1e-8 * (1 + abs(d))
            tau = tau_next_alg2(tau)

    def test_ad_fixed_point_of_dual_gradient(self):
        # zero objectives with feasible centers: at y = 0 the smoothed-dual
        # gradient vanishes, so the dual update returns y_hat itself
        comps = tuple(
            ComponentSpec(
                objective=ZeroObjective(1), lower=np.array([-1.0]), upper=np.array([1.0])
            )
            for _ in range(2)
        )
        p = SeparableProblem(components=comps, b=np.array([0.0]), coupling="eq")
        c = compute_constants(p)
        x = p.prox_centers()
        y = np.zeros(1)
        x1, y1, b1, b2, _ = step_Ad(p, c, x, y, 1.0, 1.0, 0.5)
        assert y1 == pytest.approx([0.0])

    def test_ads_feasible_point_scales_multiplier(self):
        p = generate_strongly_convex(0, 4, 3)
        c = compute_constants(p)
        lphi = c.smooth_dual_grad_lipschitz()
        ref = reference_solve(p, tol=1e-6)
        y = np.full(3, 0.7)
        tau = 0.3
        x1, y_plus, b2 = step_Ads(p, c, ref.x_star, y, lphi, tau, lphi)
        # with A x feasible, y_hat = (1 - tau) y and y+ = y_hat + grad d(y_hat)/L
        ev = exact_dual(p, (1 - tau) * y)
        # the reference x* carries ~1e-6 feasibility error, which propagates
        assert y_plus == pytest.approx((1 - tau) * y + ev.gradient / lphi, abs=1e-6)

    def test_ads_condition_error(self):
        p = generate_strongly_convex(0, 4, 3)
        c = compute_constants(p)
        lphi = c.smooth_dual_grad_lipschitz()
        with pytest.raises(ScheduleConditionError):
            step_Ads(p, c, p.prox_centers(), np.zeros(3), 1e-9 * lphi, 0.5, lphi)

    def test_ads_beta2_schedule_above_corrected_bound(self):
        # the recurrence stays below 8 L / (k+3)^2 (provable sandwich), but
        # crosses 8 L / (k+4)^2 at small k
        lphi = 1.0
        beta2, tau = lphi, 0.5
        crossed = False
        for k in range(1, 201):
            beta2 *= 1 - tau
            tau = tau_next_alg2(tau)
            assert beta2 <= 8 * lphi / (k + 3) ** 2 * (1 + 1e-12)
            if beta2 > 8 * lphi / (k + 4) ** 2:
                crossed = True
        assert crossed


class TestStopping:
    def run_config(self, **kw):
        base = dict(algorithm="alg1", max_iter=10)
        base.update(kw)
        return SolverConfig(**base)

    def feasible_trace(self, beta1, rdf_zero=True):
        from egap.trace import ConvergenceTrace, IterationRecord

        t = ConvergenceTrace()
        t.append(
            IterationRecord(
                k=0, tau=0.5, beta1=beta1, beta2=1.0, phi=5.0, dual_smoothed=5.0,
                gap_surrogate=0.0, feas_norm=0.0, rpfgap=0.0,
                rdfgap=0.0 if rdf_zero else 10.0,
                e_d=beta1, e_p=1.0, time_ms=0.0, y_norm=0.0, prox_values=np.zeros(1),
            )
        )
        return t

    def test_feasible_with_tiny_beta1_stops_with_gap(self):
        trace = self.feasible_trace(beta1=1e-12)
        decision = stopping_check(None, trace, self.run_config(), 1.0)
        assert decision.stop and decision.reason == "gap"

    def test_stall_requires_feasibility(self):
        from egap.trace import ConvergenceTrace, IterationRecord

        for rpf, expect_stop in ((0.0, True), (0.5, False)):
            t = ConvergenceTrace()
            for k, phi in enumerate([5.0, 5.000001, 5.000002, 5.0000015]):
                t.append(
                    IterationRecord(
                        k=k, tau=0.5, beta1=1.0, beta2=1.0, phi=phi, dual_smoothed=0.0,
                        gap_surrogate=0.0, feas_norm=rpf, rpfgap=rpf, rdfgap=10.0,
                        e_d=1.0, e_p=1.0, time_ms=0.0, y_norm=0.0, prox_values=np.zeros(1),
                    )
                )
            decision = stopping_check(None, t, self.run_config(eps_phi=1e-5), 1.0)
            assert decision.stop is expect_stop
            if expect_stop:
                assert decision.reason == "stall"

    def test_example1_stops_before_max_iter(self):
        p = generate_example1()
        state, trace = run(p, SolverConfig(algorithm="alg1", max_iter=10_000))
        assert trace.stop_reason in ("gap", "stall")
        assert state.k < 10_000

    def test_stop_rule_none_runs_to_max_iter(self):
        p = generate_example1()
        state, trace = run(p, SolverConfig(algorithm="alg1", max_iter=7, stop_rule="none"))
        assert state.k == 7
        assert trace.stop_reason == "max_iter"


class TestRuns:
    def trivial_feasible_problem(self):
        # zero-width boxes at the centers with b matching their sum
        comps = tuple(
            ComponentSpec(
                objective=ZeroObjective(1), lower=np.array([1.0]), upper=np.array([1.0])
            )
            for _ in range(4)
        )
        return SeparableProblem(components=comps, b=np.array([4.0]), coupling="eq")

    def test_trivial_instance_converges_at_k0(self):
        p = self.trivial_feasible_problem()
        state, trace = run(p, SolverConfig(algorithm="alg1"))
        assert state.k == 0
        assert trace.stop_reason == "gap"
        assert state.residual_norm == 0.0

    def test_max_iter_zero_gives_initialization_row_only(self):
        p = generate_example1()
        state, trace = run(p, SolverConfig(algorithm="alg1", max_iter=0, stop_rule="none"))
        assert len(trace) == 1 and state.k == 0

    def test_alg1_invariant_and_weak_duality_example1(self):
        p = generate_example1()
        ref = reference_solve(p, tol=1e-6)
        c = compute_constants(p)
        state, trace = run(
            p,
            SolverConfig(
                algorithm="alg1", max_iter=300, stop_rule="none",
                check_invariant_every_iter=True,
            ),
        )
        y_norm_ref = np.linalg.norm(ref.y_star)
        betas1 = [r.beta1 for r in trace]
        betas2 = [r.beta2 for r in trace]
        assert all(b > 0 for b in betas1) and all(b > 0 for b in betas2)
        assert all(b1 >= b2 - 1e-15 for b1, b2 in zip(betas1, betas1[1:]))
        assert all(b1 >= b2 - 1e-15 for b1, b2 in zip(betas2, betas2[1:]))
        for r in trace:
            # weak duality: d(y) <= phi* <= f + beta2 |y*|^2 / 2
            d_proxy = r.dual_smoothed  # overestimates d(y_k) by <= beta1 sum D
            assert d_proxy - r.beta1 * c.sum_diameters <= ref.phi_star + 1e-8
            f_val = r.phi + r.feas_norm**2 / (2 * r.beta2)
            assert ref.phi_star <= f_val + r.beta2 * y_norm_ref**2 / 2 + 1e-8
            # certificate lower branch
            assert r.phi - r.dual_smoothed >= -y_norm_ref * r.feas_norm - r.beta1 * c.sum_diameters - 1e-8

    def test_alg2_moderate_tau0_invariant(self):
        p = generate_random_allocation(11, 8, 2)
        state, trace = run(
            p,
            SolverConfig(
                algorithm="alg2", tau0=0.6, max_iter=200, stop_rule="none",
                check_invariant_every_iter=True,
            ),
        )
        assert state.k == 200

    def test_alg2_default_tau0_warns_and_breaks_certificate_early(self):
        # the default tau0 = 0.998 violates the switching-step product
        # condition from k = 0 (the tau update preserves the deficit exactly),
        # and the certificate indeed fails in the first iterations
        p = generate_example1()
        with pytest.warns(RuntimeWarning, match="schedule condition"):
            state, trace = run(
                p, SolverConfig(algorithm="alg2", max_iter=30, stop_rule="none")
            )
        worst = max(
            r.phi + r.feas_norm**2 / (2 * r.beta2) - r.dual_smoothed for r in trace
        )
        assert worst > 1.0

    def test_alg2_strict_schedule_raises(self):
        p = generate_example1()
        with pytest.raises(ScheduleConditionError):
            run(
                p,
                SolverConfig(
                    algorithm="alg2", max_iter=5, stop_rule="none", strict_schedule=True
                ),
            )

    def test_alg2sym_runs_with_primal_init(self):
        p = generate_example1()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            state, trace = run(
                p, SolverConfig(algorithm="alg2sym", tau0=0.6, max_iter=50, stop_rule="none",
                                check_invariant_every_iter=True)
            )
        assert state.k == 50

    def test_alg3_invariant_run(self):
        p = generate_strongly_convex(1, 5, 3)
        state, trace = run(
            p,
            SolverConfig(
                algorithm="alg3", max_iter=150, stop_rule="none",
                check_invariant_every_iter=True,
            ),
        )
        # certified upper branch: phi - d(y) <= 0 up to slack
        for r in trace:
            assert r.gap_surrogate <= 1e-8 * (1 + abs(r.dual_smoothed))

    def test_alg3_rejects_nonstrongly_convex(self):
        p = generate_example1()
        with pytest.raises(ConfigurationError):
            run(p, SolverConfig(algorithm="alg3", max_iter=3))

    def test_alg1_tau0_must_be_below_half(self):
        p = generate_example1()
        with pytest.raises(ConfigurationError):
            run(p, SolverConfig(algorithm="alg1", tau0=0.5))

    def test_simple_tau_rules(self):
        p = generate_example1()
        s1, _ = run(
            p,
            SolverConfig(
                algorithm="alg1", tau_rule="simple", tau_simple_a=0.45,
                max_iter=50, stop_rule="none", check_invariant_every_iter=True,
            ),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            s2, _ = run(
                p,
                SolverConfig(
                    algorithm="alg2", tau_rule="simple", tau_simple_a=1.75, tau_simple_b=3.0,
                    max_iter=50, stop_rule="none", check_invariant_every_iter=True,
                ),
            )
        assert s1.k == 50 and s2.k == 50

    def test_gradient_map_force_on_nonsmooth_rejected(self):
        p = generate_example1()
        with pytest.raises(Exception):
            run(
                p,
                SolverConfig(
                    algorithm="alg1", gradient_map_mode="force", max_iter=3, stop_rule="none"
                ),
            )

    def test_gradient_map_modes_agree_for_linear_objectives(self):
        p = generate_random_allocation(4, 6, 2, force_linear=True)
        kw = dict(algorithm="alg1", max_iter=40, stop_rule="none")
        s_auto, _ = run(p, SolverConfig(gradient_map_mode="auto", **kw))
        s_never, _ = run(p, SolverConfig(gradient_map_mode="never", **kw))
        assert np.max(np.abs(s_auto.x_bar - s_never.x_bar)) <= 1e-10

    def test_worker_count_does_not_change_results(self):
        p = generate_strongly_convex(5, 4, 2)  # non-batched path with real per-component solves
        s1, t1 = run(p, SolverConfig(algorithm="alg3", max_iter=25, stop_rule="none", workers=1))
        s2, t2 = run(p, SolverConfig(algorithm="alg3", max_iter=25, stop_rule="none", workers=3))
        assert np.array_equal(s1.x_bar, s2.x_bar)
        assert np.array_equal(s1.y_bar, s2.y_bar)
        assert t1.to_csv(deterministic_time=True) == t2.to_csv(deterministic_time=True)


class TestBaseline:
    def test_example1_reaches_feasibility_tolerance(self):
        p = generate_example1()
        state, trace = run_baseline_fixed(p, SolverConfig(algorithm="baseline"))
        assert trace.stop_reason == "feasibility"
        assert trace.last.rpfgap <= 1e-2

    def test_huge_eps_p_degenerate_smoke(self):
        p = generate_example1()
        state, trace = run_baseline_fixed(
            p, SolverConfig(algorithm="baseline", eps_p=1e6, max_iter=3)
        )
        # smoothness c is enormous: the first dual minimizers sit near the
        # prox centers and feasibility is immediately declared
        assert len(trace) >= 1

    def test_step_size_proportional_to_smoothness(self):
        p = generate_example1()
        c = compute_constants(p)
        for cc in (1e-3, 1e-2, 1e-1):
            assert 1.0 / c.dual_lipschitz(cc) == pytest.approx(cc / c.ratio_sum)

    def test_target_phi_stop(self):
        p = generate_example1()
        state, trace = run_baseline_fixed(
            p, SolverConfig(algorithm="baseline", eps_p=1e-9, target_phi=50.0, max_iter=50)
        )
        assert trace.stop_reason in ("target", "max_iter")


class TestConfigValidation:
    def test_alg2_tau0_range(self):
        p = generate_example1()
        with pytest.raises(ConfigurationError):
            run(p, SolverConfig(algorithm="alg2", tau0=1.0))
        with pytest.raises(ConfigurationError):
            run(p, SolverConfig(algorithm="alg2", tau0=0.0))

    def test_unknown_algorithm(self):
        with pytest.raises(ConfigurationError):
            SolverConfig(algorithm="nope").validate()

    def test_unknown_modes(self):
        with pytest.raises(ConfigurationError):
            SolverConfig(gradient_map_mode="sometimes").validate()
        with pytest.raises(ConfigurationError):
            SolverConfig(stop_rule="never").validate()

    def test_alg2sym_converges_within_valid_tau0(self):
        p = generate_example1()
        xstar = np.array([-4.0, 2, 3, 4, 5])
        state, _ = run(
            p, SolverConfig(algorithm="alg2sym", tau0=0.6, max_iter=100, stop_rule="none")
        )
        assert np.linalg.norm(state.x_bar - xstar) / np.linalg.norm(xstar) <= 0.05
