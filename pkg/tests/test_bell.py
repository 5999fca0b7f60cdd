"""CHSH machinery tests: correlations, optimization, providers."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bellfield.bell import (
    BellSettings,
    analytic_provider,
    bell_expanded,
    chsh,
    correlation_analytic,
    correlation_from_quad,
    empirical_provider,
    gisin_settings,
    max_bell_value,
    maximize_bell,
    mc_protocol_provider,
    scan_correlation,
    symbolic_protocol_provider,
)
from bellfield.ensemble import EnsembleParams
from bellfield.field import DegenerateConfigurationError, SchmidtPair, UNPOLARIZED
from bellfield.interferometer import ProjectionQuad, direct_quad
from bellfield.polarimetry import schmidt_from_dop

MEASURED_PAIR = SchmidtPair(0.750, 0.661)
FULLY_POLARIZED = SchmidtPair(1.0, 0.0)
TSIRELSON = 2.0 * math.sqrt(2.0)
# Settings attaining the quantum maximum under this package's sign order.
TSIRELSON_SETTINGS = BellSettings(0.0, math.pi / 4.0, -math.pi / 8.0, math.pi / 8.0)

angle_st = st.floats(-6.3, 6.3, allow_nan=False, allow_infinity=False)
dop_st = st.floats(0.0, 1.0, allow_nan=False, allow_infinity=False)


class TestCorrelationFromQuad:
    def test_perfect_correlation(self):
        assert correlation_from_quad(ProjectionQuad(0.5, 0.0, 0.0, 0.5)) == 1.0

    def test_uncorrelated(self):
        assert correlation_from_quad(ProjectionQuad(0.25, 0.25, 0.25, 0.25)) == 0.0

    def test_unpolarized_sixth_turn(self):
        # Oracle: the direct joint projections at a - b = pi/6 combine to
        # cos(pi/3) = 1/2.
        quad = direct_quad(UNPOLARIZED, 0.9 + math.pi / 6.0, 0.9)
        assert correlation_from_quad(quad) == pytest.approx(0.5, abs=1e-12)

    @given(angle_st, angle_st, dop_st)
    @settings(derandomize=True, max_examples=300)
    def test_bounded_by_one(self, a, b, p):
        quad = direct_quad(schmidt_from_dop(p), a, b)
        assert abs(correlation_from_quad(quad)) <= 1.0 + 1e-12


class TestCorrelationAnalytic:
    @given(angle_st, angle_st)
    @settings(derandomize=True, max_examples=300)
    def test_unpolarized_depends_on_angle_difference(self, a, b):
        c = correlation_analytic(a, b, UNPOLARIZED)
        assert c == pytest.approx(math.cos(2.0 * (a - b)), abs=1e-12)

    def test_aligned_settings_fully_correlated(self):
        for p in (0.0, 0.125, 0.7, 1.0):
            assert correlation_analytic(0.0, 0.0, schmidt_from_dop(p)) == pytest.approx(
                1.0, abs=1e-12
            )

    @given(angle_st, angle_st, dop_st)
    @settings(derandomize=True, max_examples=300)
    def test_matches_direct_quad(self, a, b, p):
        pair = schmidt_from_dop(p)
        assert correlation_analytic(a, b, pair) == pytest.approx(
            correlation_from_quad(direct_quad(pair, a, b)), abs=1e-12
        )

    def test_matches_monte_carlo_protocol(self):
        pair = schmidt_from_dop(0.125)
        provider = mc_protocol_provider(pair, EnsembleParams(4000, 16, 5))
        for a, b in [(0.3, 0.9), (1.2, 0.4), (2.2, 1.7)]:
            value, stderr = provider(a, b)
            assert abs(value - correlation_analytic(a, b, pair)) < 3 * stderr + 1e-4


class TestChsh:
    def test_separable_beam_respects_classical_bound(self):
        rng = np.random.default_rng(7)
        provider = analytic_provider(FULLY_POLARIZED)
        for _ in range(500):
            settings_ = BellSettings(*rng.uniform(0.0, 2.0 * math.pi, 4))
            assert chsh(settings_, provider).b_value <= 2.0 + 1e-9

    def test_tsirelson_settings_reach_quantum_maximum(self):
        result = chsh(TSIRELSON_SETTINGS, analytic_provider(UNPOLARIZED))
        assert result.b_value == pytest.approx(TSIRELSON, abs=1e-12)
        assert result.stderr == 0.0

    def test_measured_field_at_optimized_settings(self):
        result = maximize_bell(MEASURED_PAIR)
        assert result.b_value == pytest.approx(2.817, abs=1e-3)

    def test_provider_without_stderr(self):
        result = chsh(
            TSIRELSON_SETTINGS,
            lambda a, b: correlation_analytic(a, b, UNPOLARIZED),
        )
        assert result.b_value == pytest.approx(TSIRELSON, abs=1e-12)

    def test_stderr_quadrature(self):
        result = chsh(TSIRELSON_SETTINGS, lambda a, b: (0.5, 0.1))
        assert result.stderr == pytest.approx(0.2, abs=1e-12)

    @given(angle_st, angle_st, angle_st, angle_st, dop_st)
    @settings(derandomize=True, max_examples=300)
    def test_ceiling(self, a, ap, b, bp, p):
        pair = schmidt_from_dop(p)
        value = chsh(BellSettings(a, ap, b, bp), analytic_provider(pair)).b_value
        assert value <= max_bell_value(pair) + 1e-9

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            BellSettings(math.nan, 0.0, 0.0, 0.0)


class TestBellExpanded:
    def test_relabeling_identity(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            a, ap, b, bp = rng.uniform(-math.pi, math.pi, 4)
            pair = schmidt_from_dop(rng.uniform(0.0, 1.0))
            lhs = bell_expanded(BellSettings(a, ap, b, bp), pair)
            rhs = chsh(
                BellSettings(ap, a, bp, b), analytic_provider(pair)
            ).b_value
            assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_tsirelson_under_expansion_convention(self):
        value = bell_expanded(
            BellSettings(0.0, math.pi / 4.0, math.pi / 8.0, 3.0 * math.pi / 8.0),
            UNPOLARIZED,
        )
        assert value == pytest.approx(TSIRELSON, abs=1e-12)

    def test_all_angles_zero(self):
        assert bell_expanded(BellSettings(0, 0, 0, 0), UNPOLARIZED) == pytest.approx(
            2.0, abs=1e-15
        )


class TestMaximizeBell:
    def test_unpolarized_reaches_tsirelson(self):
        assert maximize_bell(UNPOLARIZED).b_value == pytest.approx(
            2.8284271, abs=1e-6
        )

    def test_separable_reaches_classical_bound(self):
        assert maximize_bell(FULLY_POLARIZED).b_value == pytest.approx(
            2.0, abs=1e-6
        )

    def test_measured_field(self):
        assert maximize_bell(MEASURED_PAIR).b_value == pytest.approx(
            2.8164, abs=1e-4
        )

    def test_matches_closed_form_for_random_weights(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            pair = schmidt_from_dop(rng.uniform(0.0, 1.0))
            result = maximize_bell(pair)
            assert abs(result.b_value - max_bell_value(pair)) < 1e-6

    def test_strictly_increasing_in_weight_product(self):
        products = [0.0, 1e-3, 0.1, 0.3, 0.5]
        values = []
        for prod in products:
            # kappa1^2 kappa2^2 = prod^2 with kappa1^2 + kappa2^2 = 1
            k1sq = 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - 4.0 * prod**2)))
            pair = SchmidtPair(math.sqrt(k1sq), math.sqrt(1.0 - k1sq))
            assert pair.product == pytest.approx(prod, abs=1e-12)
            values.append(maximize_bell(pair).b_value)
        assert all(v2 > v1 for v1, v2 in zip(values, values[1:]))

    def test_violation_iff_entangled(self):
        for prod in (0.0, 1e-3, 0.1, 0.3, 0.5):
            k1sq = 0.5 * (1.0 + math.sqrt(max(0.0, 1.0 - 4.0 * prod**2)))
            pair = SchmidtPair(math.sqrt(k1sq), math.sqrt(1.0 - k1sq))
            value = maximize_bell(pair).b_value
            if prod == 0.0:
                assert value <= 2.0 + 1e-9
            else:
                assert value > 2.0

    def test_grid_step_validation(self):
        with pytest.raises(ValueError):
            maximize_bell(UNPOLARIZED, grid_step=0.0)


class TestGisinSettings:
    def test_unpolarized(self):
        s = gisin_settings(UNPOLARIZED)
        assert s.a == 0.0
        assert s.a_prime == pytest.approx(math.pi / 4.0)
        assert math.cos(2.0 * s.b) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)
        assert abs(s.b) == pytest.approx(math.pi / 8.0, abs=1e-12)
        value = chsh(s, analytic_provider(UNPOLARIZED)).b_value
        assert value == pytest.approx(TSIRELSON, abs=1e-12)

    def test_measured_field_matches_optimizer(self):
        value = chsh(
            gisin_settings(MEASURED_PAIR), analytic_provider(MEASURED_PAIR)
        ).b_value
        assert value == pytest.approx(2.8164, abs=1e-4)
        assert value == pytest.approx(maximize_bell(MEASURED_PAIR).b_value, abs=1e-6)

    def test_optimality_for_random_weights(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            pair = schmidt_from_dop(rng.uniform(0.0, 0.999))
            at_gisin = chsh(gisin_settings(pair), analytic_provider(pair)).b_value
            assert at_gisin == pytest.approx(max_bell_value(pair), abs=1e-9)

    def test_degenerate_separable_beam(self):
        with pytest.raises(DegenerateConfigurationError):
            gisin_settings(FULLY_POLARIZED)


class TestScanCorrelation:
    def test_unpolarized_curves_are_pure_cosines(self):
        grid = np.arange(0.0, 2.0 * math.pi, math.pi / 36.0)
        provider = analytic_provider(UNPOLARIZED)
        for b in (0.0, math.pi / 4.0, math.pi / 2.0):
            for a, value, stderr in scan_correlation(b, grid, provider):
                assert value == pytest.approx(
                    math.cos(2.0 * (a - b)), abs=1e-12
                )
                assert stderr == 0.0

    def test_quarter_turn_curves_are_shifted_copies(self):
        grid = np.arange(0.0, 2.0 * math.pi, math.pi / 4.0)
        provider = analytic_provider(UNPOLARIZED)
        base = dict(
            (round(a, 12), v) for a, v, _ in scan_correlation(0.0, grid, provider)
        )
        shifted = scan_correlation(math.pi / 4.0, grid + math.pi / 4.0, provider)
        for a, value, _ in shifted:
            assert value == pytest.approx(
                base[round(a - math.pi / 4.0, 12)], abs=1e-12
            )

    def test_fully_polarized_amplitude(self):
        grid = np.linspace(0.0, math.pi, 25)
        for b in (0.3, 1.0):
            points = scan_correlation(b, grid, analytic_provider(FULLY_POLARIZED))
            for a, value, _ in points:
                assert value == pytest.approx(
                    math.cos(2.0 * a) * math.cos(2.0 * b), abs=1e-12
                )
                assert abs(value) <= abs(math.cos(2.0 * b)) + 1e-12

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            scan_correlation(0.0, [], analytic_provider(UNPOLARIZED))


class TestProviders:
    def test_symbolic_protocol_matches_analytic(self):
        pair = schmidt_from_dop(0.125)
        provider = symbolic_protocol_provider(pair)
        for a, b in [(0.2, 0.8), (1.4, 0.3), (2.8, 2.0)]:
            value, stderr = provider(a, b)
            assert value == pytest.approx(
                correlation_analytic(a, b, pair), abs=1e-12
            )
            assert stderr == 0.0

    def test_empirical_provider_matches_analytic(self):
        pair = schmidt_from_dop(0.3)
        provider = empirical_provider(pair, EnsembleParams(4000, 16, 17))
        for a, b in [(0.5, 1.1), (1.9, 0.2)]:
            value, stderr = provider(a, b)
            assert stderr > 0.0
            assert abs(value - correlation_analytic(a, b, pair)) < 3 * stderr + 1e-4

    def test_empirical_provider_defined_for_separable_beam(self):
        provider = empirical_provider(FULLY_POLARIZED, EnsembleParams(2000, 16, 19))
        value, stderr = provider(0.4, 1.0)
        expected = correlation_analytic(0.4, 1.0, FULLY_POLARIZED)
        assert abs(value - expected) < 3 * stderr + 1e-3

    def test_mc_provider_deterministic_and_order_independent(self):
        pair = schmidt_from_dop(0.125)
        params = EnsembleParams(1000, 16, 23)
        p1 = mc_protocol_provider(pair, params)
        p2 = mc_protocol_provider(pair, params)
        first = p1(0.3, 0.9)
        # Evaluating the settings in a different order must not change values.
        assert p2(1.0, 0.1) == p1(1.0, 0.1)
        assert p2(0.3, 0.9) == first
