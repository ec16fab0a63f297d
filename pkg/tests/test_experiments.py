import math

import numpy as np
import pytest

from waverate.chf import RefDensity, reference_density, scenario_process
from waverate.estimator import DensityEstimate, fit_density, select_jn
from waverate.experiments import (
    DESK_NS,
    ExperimentPlan,
    QuadSpec,
    decompose_error,
    fit_rate,
    fit_rate_arrays,
    ise,
    preset_by_name,
    run_imse,
    scenario_presets,
)
from waverate.experiments import _true_coeffs_dense
from waverate.processes import gen_path
from waverate.wavelets import build_table


def small_plan(**overrides) -> ExperimentPlan:
    base = dict(
        name="test",
        scenario="gauss_d15",
        ns=(256, 512, 1024),
        reps=3,
        seed=12345,
        vm=4,
        M=1,
        beta=4.0,
        gamma=1.0,
        truncation=512,
    )
    base.update(overrides)
    return ExperimentPlan(**base)


def std_normal_ref() -> RefDensity:
    return RefDensity(
        name="std_normal",
        fn=lambda x: np.exp(-x * x / 2.0) / math.sqrt(2 * math.pi),
        mass_fn=lambda L: math.erf(L / math.sqrt(2.0)),
    )


class TestIse:
    def test_zero_error_for_matching_density(self):
        ref = std_normal_ref()
        assert ise(ref, ref, 10.0, 2**13 + 1) < 1e-10

    def test_zero_estimate_gives_density_energy(self):
        # int f^2 = 1 / (2 sqrt(pi)) for the standard normal
        val = ise(lambda x: 0.0 * x, std_normal_ref(), 10.0, 2**13 + 1)
        assert val == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), abs=1e-6)

    def test_quadrature_grid_convergence(self, gauss_sample):
        from waverate.estimator import WaveletDensityEstimator

        est = WaveletDensityEstimator(vm=4, jn=2).fit(gauss_sample)
        ref = std_normal_ref()
        coarse = ise(est, ref, 10.0, 2**12 + 1)
        fine = ise(est, ref, 10.0, 2**13 + 1)
        assert abs(coarse - fine) < 1e-6

    def test_nonnegative(self, gauss_sample):
        from waverate.estimator import WaveletDensityEstimator

        est = WaveletDensityEstimator(vm=4, jn=1).fit(gauss_sample)
        assert ise(est, std_normal_ref()) >= 0.0


class TestRunImse:
    def test_deterministic_repeat(self):
        plan = small_plan()
        a = run_imse(plan)
        b = run_imse(plan)
        np.testing.assert_array_equal(a.ises, b.ises)

    def test_execution_order_does_not_matter(self):
        plan = small_plan()
        a = run_imse(plan)
        order = list(range(len(plan.ns) * plan.reps))[::-1]
        b = run_imse(plan, task_order=order)
        np.testing.assert_array_equal(a.ises, b.ises)
        np.testing.assert_array_equal(a.mean_ise, b.mean_ise)

    def test_mean_ise_small_at_moderate_n(self):
        # regression bound frozen from the first verified run of this plan
        plan = small_plan(ns=(2**14,), reps=5, truncation=2048, seed=2024)
        res = run_imse(plan)
        assert res.mean_ise[0] < 1.2e-3

    def test_monotone_flags_reported(self):
        plan = small_plan(reps=4)
        res = run_imse(plan)
        assert len(res.monotone_ok) == len(plan.ns) - 1

    def test_moment_budget_enforced(self):
        plan = small_plan(vm=2)
        with pytest.raises(ValueError, match="ceil"):
            run_imse(plan)

    def test_beta_gamma_consistency_enforced(self):
        plan = small_plan(beta=0.5, gamma=1.0, M=8)
        with pytest.raises(ValueError, match="gamma"):
            run_imse(plan)

    def test_rows_canonical_order(self):
        plan = small_plan(ns=(256, 512), reps=2)
        res = run_imse(plan)
        rows = list(res.rows())
        assert [r[:2] for r in rows] == [(256, 0), (256, 1), (512, 0), (512, 1)]


class TestFitRate:
    def test_exact_power_law_recovered(self):
        ns = (2**10, 2**11, 2**12, 2**13)
        means = [7.3 * n**-0.8 for n in ns]
        rate = fit_rate_arrays(ns, means, [0.0] * 4, 1, 4.0)
        assert rate.slope == pytest.approx(-0.8, abs=1e-12)
        assert rate.r_squared == pytest.approx(1.0, abs=1e-12)
        assert rate.theoretical_slope == pytest.approx(-8.0 / 9.0)

    def test_constant_ise_gives_zero_slope(self):
        ns = (2**10, 2**11, 2**12)
        rate = fit_rate_arrays(ns, [0.5] * 3, [0.0] * 3, 1, 1.0)
        assert rate.slope == pytest.approx(0.0, abs=1e-12)

    def test_requires_three_sizes(self):
        with pytest.raises(ValueError, match="3 distinct"):
            fit_rate_arrays((256, 512), [0.1, 0.05], [0.0, 0.0], 1, 4.0)

    def test_requires_positive_means(self):
        with pytest.raises(ValueError, match="positive"):
            fit_rate_arrays((1, 2, 4), [0.1, 0.0, 0.01], [0.0] * 3, 1, 4.0)

    def test_noisy_smallest_size_excluded(self):
        ns = (2**8, 2**10, 2**11, 2**12)
        means = [1.0, 0.1, 0.05, 0.025]
        stderr = [0.5, 0.001, 0.001, 0.001]
        rate = fit_rate_arrays(ns, means, stderr, 1, 4.0)
        assert rate.ns_excluded == (256,)
        assert rate.ns_used == (1024, 2048, 4096)

    def test_rate_from_result(self):
        plan = small_plan(reps=4)
        rate = fit_rate(run_imse(plan), plan.M, plan.beta)
        assert rate.slope < 0.0


class TestDecomposition:
    def test_synthetic_exact_coefficients_leave_only_tail(self):
        # an estimate whose coefficients equal the true ones has zero
        # stochastic error, so the split reduces to the tail term
        table = build_table(4)
        ref = reference_density("gauss_d05")
        quad = QuadSpec(L_eval=15.0, grid=2**13 + 1)
        jn = 1

        def true_level(kind, j):
            s_lo, s_hi = table._support(kind)
            k_lo = math.ceil(-quad.L_eval * 2**j - s_hi)
            k_hi = math.floor(quad.L_eval * 2**j - s_lo)
            vals = _true_coeffs_dense(ref, table, kind, j, k_lo, k_hi, 2**12)
            return np.arange(k_lo, k_hi + 1, dtype=np.int64), vals

        aks, a = true_level("phi", 0)
        bks, bs = zip(*(true_level("psi", j) for j in range(jn + 1)))
        est = DensityEstimate(
            n=1, jn=jn, vm=4, alpha_ks=aks, alpha=a, beta_ks=tuple(bks), betas=tuple(bs)
        )
        dec = decompose_error(est, table, ref, j_tail=jn + 4, quad=quad)
        assert dec.i1 < 1e-12
        assert dec.i2 < 1e-12
        assert dec.total == pytest.approx(dec.i3, rel=1e-9)

    def test_haar_uniform_density_has_no_detail_energy(self):
        # the uniform density on [0,1) is the Haar scaling function itself
        table = build_table(1)

        def uniform(x):
            x = np.asarray(x, dtype=float)
            return ((x >= 0.0) & (x < 1.0)).astype(float)

        ref = RefDensity(name="uniform01", fn=uniform, mass_fn=lambda L: 1.0)
        for j in range(0, 4):
            beta = _true_coeffs_dense(ref, table, "psi", j, -2 * 2**j, 2 * 2**j, 2**12)
            assert np.max(np.abs(beta)) < 1e-10

    def test_parseval_consistency_on_gauss_d05(self):
        proc = scenario_process("gauss_d05")
        ref = reference_density("gauss_d05")
        path = gen_path(proc, 2**12, 99, stream_path=(0, 0))
        table = build_table(4)
        jn = select_jn(2**12, 1, 4.0)
        est = fit_density(path.values, table, jn)
        dec = decompose_error(est, table, ref, j_tail=jn + 4)
        assert dec.relative_residual < 0.05
        # deepening the tail keeps the identity
        dec2 = decompose_error(est, table, ref, j_tail=jn + 5)
        assert dec2.relative_residual <= dec.relative_residual + 1e-9

    def test_j_tail_must_exceed_jn(self):
        table = build_table(4)
        ref = reference_density("gauss_d05")
        est = fit_density(np.array([0.0, 1.0]), table, jn=2)
        with pytest.raises(ValueError):
            decompose_error(est, table, ref, j_tail=2)


class TestPresets:
    def test_five_full_plus_five_desk(self):
        plans = scenario_presets()
        assert len(plans) == 10
        full = [p for p in plans if not p.name.endswith("_desk")]
        desk = [p for p in plans if p.name.endswith("_desk")]
        assert len(full) == 5 and len(desk) == 5

    def test_full_presets_use_paper_sample_size(self):
        assert preset_by_name("gauss_d05").ns == (65536,)

    def test_all_presets_use_eight_tap_wavelet(self):
        for plan in scenario_presets():
            assert 2 * plan.vm == 8

    def test_desk_presets_scaled(self):
        for plan in scenario_presets():
            if plan.name.endswith("_desk"):
                assert plan.ns == DESK_NS
                assert plan.reps >= 10

    def test_cauchy_d05_negative_control_label(self):
        assert preset_by_name("cauchy_d05").theorem_applies is False
        assert preset_by_name("cauchy_d05_desk").theorem_applies is False
        for name in ("gauss_d05", "gauss_d15", "cauchy_d15", "chisq_ma4"):
            assert preset_by_name(name).theorem_applies is True

    def test_moment_budget_consistent(self):
        for plan in scenario_presets():
            assert plan.vm >= math.ceil(plan.M * plan.beta)
            assert plan.beta >= plan.gamma

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            preset_by_name("nope")

    def test_plan_validation(self):
        with pytest.raises(ValueError):
            small_plan(ns=(512, 256))
        with pytest.raises(ValueError):
            small_plan(reps=0)


class TestCustomScenario:
    def test_custom_plan_runs_with_explicit_process_and_reference(self):
        from waverate.processes import CoefficientSeq, InnovationDist, ProcessConfig

        plan = ExperimentPlan(
            name="iid_normal",
            scenario="custom",
            ns=(256, 512),
            reps=2,
            seed=8,
            vm=4,
            M=1,
            beta=4.0,
            process_config=ProcessConfig(
                CoefficientSeq.custom((1.0,)), InnovationDist.gaussian(), burn_in=0
            ),
            ref_density=std_normal_ref(),
        )
        res = run_imse(plan)
        assert res.ises.shape == (2, 2)
        assert np.all(res.ises >= 0.0)

    def test_custom_requires_both_overrides(self):
        with pytest.raises(ValueError, match="custom"):
            ExperimentPlan(
                name="broken", scenario="custom", ns=(256,), reps=1, seed=1
            )
