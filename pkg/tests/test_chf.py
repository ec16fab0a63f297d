import math

import numpy as np
import pytest

from waverate.chf import (
    InsufficientDomainError,
    SCENARIOS,
    audit_gamma_condition,
    audit_integrability,
    innovation_cf,
    invert_cf_density,
    process_cf,
    process_char_fn,
    reference_density,
    scenario_process,
)
from waverate.processes import CoefficientSeq, InnovationDist, ProcessConfig


def chi2_cf_quadrature(df: int, u: float) -> complex:
    """Independent oracle: int density(x) e^{iux} dx by fine trapezoid."""
    k = df / 2.0
    xs = np.linspace(1e-9, 400.0, 2_000_001)
    dens = np.exp((k - 1) * np.log(xs) - xs / 2.0 - k * math.log(2.0) - math.lgamma(k))
    return complex(np.trapezoid(dens * np.exp(1j * u * xs), xs))


class TestInnovationCf:
    def test_gaussian(self):
        assert innovation_cf(InnovationDist.gaussian(), 1.0) == pytest.approx(
            math.exp(-0.5), abs=1e-15
        )

    def test_cauchy(self):
        assert innovation_cf(InnovationDist.cauchy(1.0), -2.0) == pytest.approx(
            math.exp(-2.0), abs=1e-15
        )

    def test_chi_squared_matches_quadrature_oracle(self):
        got = innovation_cf(InnovationDist.chi_squared(6), 0.5)
        assert got == pytest.approx((1.0 - 1.0j) ** -3, abs=1e-14)
        assert got == pytest.approx(chi2_cf_quadrature(6, 0.5), abs=1e-9)

    def test_gamma_matches_quadrature_oracle(self):
        got = innovation_cf(InnovationDist.gamma(3.0, 1.0), 0.7)
        oracle = complex(
            np.trapezoid(
                (lambda xs: xs**2 * np.exp(-xs) / 2.0 * np.exp(1j * 0.7 * xs))(
                    np.linspace(1e-9, 200.0, 1_000_001)
                ),
                np.linspace(1e-9, 200.0, 1_000_001),
            )
        )
        assert got == pytest.approx(oracle, abs=1e-9)

    @pytest.mark.parametrize(
        "dist",
        [
            InnovationDist.gaussian(1.0, 2.0),
            InnovationDist.cauchy(0.5),
            InnovationDist.stable(1.3, 1.0),
            InnovationDist.chi_squared(4),
            InnovationDist.gamma(2.5, 0.7),
        ],
    )
    def test_char_fn_invariants(self, dist):
        u = np.linspace(-30.0, 30.0, 1001)
        phi = innovation_cf(dist, u)
        assert innovation_cf(dist, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert np.max(np.abs(phi)) <= 1.0 + 1e-12
        np.testing.assert_allclose(
            innovation_cf(dist, -u), np.conj(phi), rtol=0, atol=1e-14
        )


class TestProcessCf:
    def test_single_tap_equals_innovation(self):
        cfg = ProcessConfig(
            CoefficientSeq.custom((1.0,)), InnovationDist.chi_squared(6), burn_in=0
        )
        u = np.linspace(-5, 5, 101)
        np.testing.assert_allclose(
            process_cf(cfg, u), innovation_cf(InnovationDist.chi_squared(6), u), atol=1e-15
        )

    def test_gaussian_collapse(self):
        cfg = scenario_process("gauss_d05", truncation=100_001)
        u = np.linspace(-10, 10, 201)
        expected = np.exp(-0.5 * (4.0 / math.pi) * u * u)
        got = np.abs(process_cf(cfg, u))
        np.testing.assert_allclose(got, expected, rtol=1e-6)

    def test_cauchy_collapse(self):
        cfg = scenario_process("cauchy_d15", truncation=100_001)
        u = np.linspace(-10, 10, 201)
        np.testing.assert_allclose(
            np.abs(process_cf(cfg, u)), np.exp(-3.0 * np.abs(u)), rtol=1e-4
        )

    def test_truncation_stability_for_steep_decay(self):
        u = np.linspace(-20, 20, 401)
        full = process_cf(scenario_process("cauchy_d15", truncation=10_000), u)
        tenth = process_cf(scenario_process("cauchy_d15", truncation=1_000), u)
        assert np.max(np.abs(full - tenth)) < 1e-4

    def test_underflow_early_exit_matches_zero(self):
        cfg = ProcessConfig(
            CoefficientSeq.ma(tuple([1.0] * 50)), InnovationDist.chi_squared(6)
        )
        val = process_cf(cfg, np.array([500.0]))
        assert abs(val[0]) < 1e-200


class TestInversion:
    def test_gauss_d05_at_zero(self):
        cf = process_char_fn(scenario_process("gauss_d05"))
        assert invert_cf_density(cf, 0.0) == pytest.approx(math.sqrt(2.0) / 4.0, abs=1e-6)

    def test_gauss_d15_at_zero(self):
        cf = process_char_fn(scenario_process("gauss_d15"))
        assert invert_cf_density(cf, 0.0) == pytest.approx(0.216506, abs=1e-5)

    def test_cauchy_d15_at_zero(self):
        cf = process_char_fn(scenario_process("cauchy_d15"))
        assert invert_cf_density(cf, 0.0) == pytest.approx(1.0 / (3.0 * math.pi), abs=1e-5)

    def test_imaginary_residue_is_reported_small(self):
        cf = process_char_fn(scenario_process("gauss_d05"))
        vals, resid = invert_cf_density(cf, np.array([0.0, 1.0]), full_output=True)
        assert resid < 1e-12
        assert vals.shape == (2,)

    def test_insufficient_domain_raises(self):
        cf = process_char_fn(scenario_process("gauss_d05"))
        with pytest.raises(InsufficientDomainError) as err:
            invert_cf_density(cf, 0.0, L=0.5)
        assert err.value.edge_value > 1e-8

    @pytest.mark.parametrize("scenario", SCENARIOS)
    def test_oracle_equivalence_spot_grid(self, scenario):
        cf = process_char_fn(scenario_process(scenario))
        ref = reference_density(scenario)
        xs = np.linspace(-10.0, 10.0, 81)
        sup = np.max(np.abs(invert_cf_density(cf, xs) - ref(xs)))
        assert sup < 1e-5


class TestReferenceDensities:
    def test_gauss_d05_value(self):
        assert reference_density("gauss_d05")(0.0) == pytest.approx(0.353553, abs=1e-6)

    def test_cauchy_d15_formula(self):
        ref = reference_density("cauchy_d15")
        assert ref(3.0) == pytest.approx(1.0 / (6.0 * math.pi), rel=1e-12)
        assert ref(0.0) == pytest.approx(3.0 / (9.0 * math.pi), rel=1e-12)

    def test_chisq_ma4_matches_gamma_12_2(self):
        ref = reference_density("chisq_ma4")
        x = 22.0
        oracle = x**11 * math.exp(-x / 2.0) / (2.0**12 * math.factorial(11))
        assert ref(x) == pytest.approx(oracle, rel=1e-12)
        assert ref(-1.0) == 0.0

    def test_nonnegative_and_mass(self):
        for scenario in SCENARIOS:
            ref = reference_density(scenario)
            xs = np.linspace(-60.0, 100.0, 20001)
            vals = ref(xs)
            assert np.all(vals >= 0.0)
            quad = np.trapezoid(vals, xs)
            # quadrature mass agrees with the analytic clipped mass
            lo_mass = ref.mass(60.0)
            assert quad == pytest.approx(lo_mass, abs=0.08)

    def test_light_tail_mass_captured(self):
        for scenario in ("gauss_d05", "gauss_d15", "chisq_ma4"):
            assert reference_density(scenario).mass(80.0) > 0.99

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            reference_density("nope")
        with pytest.raises(ValueError):
            scenario_process("nope")


class TestAudits:
    def test_gaussian_passes_all_betas(self):
        for beta in range(0, 9):
            assert audit_integrability(InnovationDist.gaussian(), float(beta)).passed

    def test_chi_squared_threshold(self):
        # integrable iff df > 2 (beta + 1)
        assert not audit_integrability(InnovationDist.chi_squared(4), 1.0).passed
        assert audit_integrability(InnovationDist.chi_squared(6), 1.0).passed
        assert audit_integrability(InnovationDist.chi_squared(8), 1.0).passed

    def test_gamma_threshold(self):
        # integrable iff shape > beta + 1
        assert audit_integrability(InnovationDist.gamma(3.0, 1.0), 1.0).passed
        assert not audit_integrability(InnovationDist.gamma(1.5, 1.0), 1.0).passed

    def test_report_is_json_ready(self):
        report = audit_integrability(InnovationDist.gaussian(), 2.0)
        d = report.to_dict()
        assert d["check"] == "integrability"
        assert d["passed"] is True

    def test_gamma_condition_examples(self):
        assert audit_gamma_condition(InnovationDist.gaussian(), 1.0).passed
        for alpha in (0.8, 1.5):
            assert audit_gamma_condition(InnovationDist.stable(alpha), alpha / 2.0).passed
        for dist in (InnovationDist.chi_squared(6), InnovationDist.gamma(3.0)):
            assert audit_gamma_condition(dist, 0.5).passed

    def test_gamma_condition_detects_failure(self):
        report = audit_gamma_condition(InnovationDist.cauchy(), 1.0)
        assert not report.passed
        assert report.sup_ratio_refined > report.sup_ratio * 2

    def test_gamma_validation(self):
        with pytest.raises(ValueError):
            audit_gamma_condition(InnovationDist.gaussian(), 1.5)
        with pytest.raises(ValueError):
            audit_integrability(InnovationDist.gaussian(), -1.0)


class TestCfReferenceDensity:
    def test_inversion_built_reference_matches_closed_form(self):
        from waverate.chf import cf_reference_density

        cf = process_char_fn(scenario_process("gauss_d05"))
        ref = cf_reference_density(cf, name="gauss_d05_inverted")
        closed = reference_density("gauss_d05")
        xs = np.linspace(-6.0, 6.0, 41)
        np.testing.assert_allclose(ref(xs), closed(xs), atol=1e-6)
        assert ref.kind == "cf_inversion"
        assert np.all(ref(xs) >= 0.0)
        assert ref.mass(10.0) == pytest.approx(closed.mass(10.0), abs=1e-5)
