"""
Unit tests for the band solver: closed forms, dispatch, endpoints and errors.
"""

import math
import sys
from pathlib import Path
from unittest.mock import Mock

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from fairprice.demand import DemandModel, Exponential, MixtureLogistic, Support, Uniform
from fairprice.errors import (CapabilityError, ConfigurationError, EmptyMarketError, MatchingError,
                              ParameterError, PolicyRangeError)
from fairprice.solver import (EPS_CAP_FRACTION, Difference, Ratio, cost_shift, dominance_compare,
                              epsilon_threshold, make_policy, max_epsilon, max_gamma, sensitivity, solve,
                              solve_difference, solve_ratio, solve_uniform_price, sweep)
from tests import FairPriceTestCase
from tests.fixtures.test_data import (EXPONENTIAL_THRESHOLD, UNIFORM_EPS_VALUES, UNIFORM_GAMMA_VALUES,
                                      UNIFORM_THRESHOLD, exponential_difference_lower, uniform_difference_band,
                                      uniform_difference_welfare, uniform_ratio_band)


class NoDerivativeUniform(DemandModel):
    """Uniform{1} without a density derivative."""

    @property
    def support(self) -> Support:
        return Support(1.0)

    def _pdf(self, v):
        return np.ones_like(v)

    def _survival(self, v):
        return 1.0 - v


class TestPolicies(FairPriceTestCase):

    def test_make_policy(self):
        self.assertEqual(make_policy('diff', 0.3), Difference(0.3))
        self.assertEqual(make_policy('ratio', 2), Ratio(2.0))
        with self.assertRaises(ConfigurationError):
            make_policy('cap', 1.0)

    def test_invalid_parameters(self):
        for build in (lambda: Difference(-0.1), lambda: Difference(math.nan), lambda: Ratio(0.5),
                      lambda: Ratio(math.inf)):
            with self.assertRaises(PolicyRangeError):
                build()


class TestClosedForms(FairPriceTestCase):
    """Optimal bands with explicit solutions."""

    def test_uniform_difference(self):
        for eps in UNIFORM_EPS_VALUES:
            with self.subTest(eps=eps):
                solution = solve_difference(Uniform(1.0), eps)
                p_l, p_u = uniform_difference_band(eps)
                ps, cs, ts = uniform_difference_welfare(eps)
                self.assertClose(solution.band.p_l, p_l, 1e-11)
                self.assertClose(solution.band.p_u, p_u, 1e-11)
                self.assertClose(solution.ps, ps, 1e-10)
                self.assertClose(solution.cs, cs, 1e-10)
                self.assertClose(solution.ts, ts, 1e-10)
                self.assert_welfare_identity(solution)
                self.assertTrue(solution.binding)
                self.assertTrue(solution.regular)

    def test_uniform_ratio(self):
        for gamma in UNIFORM_GAMMA_VALUES:
            with self.subTest(gamma=gamma):
                solution = solve_ratio(Uniform(1.0), gamma)
                p_l, p_u = uniform_ratio_band(gamma)
                self.assertClose(solution.band.p_l, p_l, 1e-11)
                self.assertClose(solution.band.p_u, p_u, 1e-11)
                self.assertClose(solution.band.ratio(), gamma, 1e-9, rel=True)

    def test_exponential_difference(self):
        for eps in (0.1, 0.5, 1.0, 3.0):
            with self.subTest(eps=eps):
                solution = solve_difference(Exponential(1.0), eps)
                self.assertClose(solution.band.p_l, exponential_difference_lower(eps), 1e-11)
                self.assertClose(solution.band.width, eps, 1e-12)
                self.assertLess(abs(solution.foc_residual), 1e-10)

    def test_uniform_price(self):
        self.assertClose(solve_uniform_price(Uniform(1.0)).band.p_l, 0.5, 1e-12)
        self.assertClose(solve_uniform_price(Exponential(1.0)).band.p_u, 1.0, 1e-12)
        self.assertClose(solve_uniform_price(Uniform(1.0), c=0.4).band.p_l, 0.7, 1e-12)

    def test_cost_is_applied_to_bands(self):
        """Uniform{1} at c = 0.2 solves on Uniform{0.8} and shifts back."""
        diff = solve_difference(Uniform(1.0), 0.2, c=0.2)
        self.assertClose(diff.band.p_l, 0.5, 1e-11)
        self.assertClose(diff.band.p_u, 0.7, 1e-11)

        ratio = solve_ratio(Uniform(1.0), 2.0, c=0.2)
        self.assertClose(ratio.band.p_l, 0.52, 1e-11)
        self.assertClose(ratio.band.p_u, 0.84, 1e-11)
        self.assertClose(ratio.band.ratio(0.2), 2.0, 1e-9)
        self.assertEqual(ratio.welfare.cost, 0.2)

    def test_solve_dispatch(self):
        self.assertEqual(solve(Uniform(1.0), Difference(0.4)).band, solve_difference(Uniform(1.0), 0.4).band)
        self.assertEqual(solve(Uniform(1.0), Ratio(3.0)).band, solve_ratio(Uniform(1.0), 3.0).band)


class TestEndpoints(FairPriceTestCase):
    """Uniform pricing at eps = 0 or gamma = 1, perfect discrimination at the other end."""

    def test_zero_caps_give_uniform_price(self):
        for solution in (solve_difference(Uniform(1.0), 0.0), solve_ratio(Uniform(1.0), 1.0)):
            self.assertClose(solution.band.p_l, 0.5, 1e-12)
            self.assertEqual(solution.band.p_l, solution.band.p_u)
            self.assertTrue(solution.binding)

    def test_perfect_discrimination(self):
        eps = 1.0 - EPS_CAP_FRACTION / 10.0
        solution = solve_difference(Uniform(1.0), eps)
        self.assertFalse(solution.binding)
        self.assertEqual((solution.band.p_l, solution.band.p_u), (0.0, 1.0))
        self.assertClose(solution.ps, 0.5, 1e-12)
        self.assertClose(solution.cs, 0.0, 1e-12)

        ratio = solve_ratio(Exponential(1.0), 2.0 * max_gamma(Exponential(1.0)))
        self.assertFalse(ratio.binding)
        self.assertEqual(ratio.band.p_l, 0.0)

    def test_limits(self):
        self.assertClose(max_epsilon(Uniform(1.0)), 1.0 - EPS_CAP_FRACTION, 1e-15)
        self.assertClose(max_epsilon(Uniform(1.0), c=0.5), 0.5 * (1.0 - EPS_CAP_FRACTION), 1e-15)
        self.assertEqual(max_gamma(Uniform(1.0)), 1e4)

    def test_largest_solved_caps(self):
        for model in (Uniform(1.0), Exponential(1.0)):
            with self.subTest(model=model.describe()):
                diff = solve_difference(model, max_epsilon(model))
                ratio = solve_ratio(model, max_gamma(model))
                self.assertTrue(diff.binding)
                self.assertTrue(ratio.binding)
                self.assertLess(ratio.band.p_l, 2e-3)

    def test_cap_outside_range(self):
        with self.assertRaises(PolicyRangeError):
            solve_difference(Uniform(1.0), 1.0)
        with self.assertRaises(PolicyRangeError):
            solve_difference(Uniform(1.0), 0.6, c=0.5)
        with self.assertRaises(PolicyRangeError):
            solve_ratio(Uniform(1.0), 0.9)


class TestCostShift(FairPriceTestCase):

    def test_zero_cost_is_identity(self):
        model = Exponential(1.0)
        self.assertIs(cost_shift(model, 0.0), model)

    def test_closed_form_shift(self):
        self.assertEqual(cost_shift(Uniform(1.0), 0.25), Uniform(0.75))

    def test_invalid_costs(self):
        with self.assertRaises(ParameterError):
            cost_shift(Uniform(1.0), -0.1)
        with self.assertRaises(ParameterError):
            cost_shift(Uniform(1.0), math.nan)
        with self.assertRaises(EmptyMarketError):
            cost_shift(Uniform(1.0), 1.0)
        with self.assertRaises(EmptyMarketError):
            cost_shift(Exponential(1.0), 100.0)


class TestThreshold(FairPriceTestCase):

    def test_closed_forms(self):
        self.assertClose(epsilon_threshold(Uniform(1.0)), UNIFORM_THRESHOLD, 1e-9)
        self.assertClose(epsilon_threshold(Exponential(1.0)), EXPONENTIAL_THRESHOLD, 1e-9)

    def test_threshold_is_twice_the_lower_price(self):
        model = Exponential(2.0)
        eps0 = epsilon_threshold(model, c=0.3)
        lower = solve_difference(model, eps0, c=0.3).band.p_l - 0.3
        self.assertClose(eps0, 2.0 * lower, 1e-9)


class TestSensitivity(FairPriceTestCase):

    def test_uniform_difference(self):
        solution = solve_difference(Uniform(1.0), 0.3)
        d = sensitivity(Uniform(1.0), solution)
        self.assertClose(d.d_lower, -0.5, 1e-12)
        self.assertClose(d.d_upper, 0.5, 1e-12)

    def test_uniform_ratio(self):
        gamma = 2.0
        d = sensitivity(Uniform(1.0), solve_ratio(Uniform(1.0), gamma))
        self.assertClose(d.d_lower, (1.0 - gamma ** 2) / (1.0 + gamma ** 2) ** 2, 1e-10)
        self.assertClose(d.d_upper, 2.0 * gamma / (1.0 + gamma ** 2) ** 2, 1e-10)

    def test_requires_density_derivative(self):
        solution = solve_difference(Uniform(1.0), 0.3)
        with self.assertRaises(CapabilityError):
            sensitivity(NoDerivativeUniform(), solution)

    def test_undefined_at_endpoint(self):
        solution = solve_difference(Uniform(1.0), 1.0 - EPS_CAP_FRACTION / 10.0)
        with self.assertRaises(PolicyRangeError):
            sensitivity(Uniform(1.0), solution)


class TestSweep(FairPriceTestCase):

    def test_rows_follow_parameters(self):
        table = sweep(Uniform(1.0), 'diff', [0.0, 0.25, 0.5])
        self.assertEqual([row.param for row in table.rows], [0.0, 0.25, 0.5])
        np.testing.assert_allclose(table.column('p_l'), [0.5, 0.375, 0.25], atol=1e-11)
        self.assertEqual(table.succeeded, 3)
        self.assertClose(table.efficient_trade, 0.5, 1e-14)
        self.assertClose(table.uniform_ps, 0.25, 1e-11)
        self.assertClose(table.uniform_cs, 0.125, 1e-11)
        self.assertEqual(table.model, 'uniform(a=1)')

    def test_failed_rows_are_recorded(self):
        table = sweep(Uniform(1.0), 'diff', [0.2, 1.5])
        self.assertEqual(table.succeeded, 1)
        self.assertIn('PolicyRangeError', table.rows[1].error)
        self.assertTrue(math.isnan(table.column('ps')[1]))
        self.assertEqual(table.records()[1]['error'], table.rows[1].error)

    def test_workers_do_not_change_results(self):
        gammas = list(np.geomspace(1.0, 16.0, 9))
        serial = sweep(Exponential(1.0), 'ratio', gammas)
        threaded = sweep(Exponential(1.0), 'ratio', gammas, max_workers=4)
        np.testing.assert_array_equal(serial.column('p_l'), threaded.column('p_l'))
        np.testing.assert_array_equal(serial.column('param'), threaded.column('param'))

    def test_invalid_sweeps(self):
        with self.assertRaises(ConfigurationError):
            sweep(Uniform(1.0), 'diff', [0.5, 0.2])
        with self.assertRaises(ConfigurationError):
            sweep(Uniform(1.0), 'diff', [0.2, 0.2])
        with self.assertRaises(ConfigurationError):
            sweep(Uniform(1.0), 'diff', [])
        with self.assertRaises(ConfigurationError):
            sweep(Uniform(1.0), 'band', [0.2])


class TestDominance(FairPriceTestCase):

    def test_uniform_gamma_two(self):
        """Ratio band (0.4, 0.8) has CS 0.02, matched by eps = 0.6 with PS 0.46."""
        record = dominance_compare(Uniform(1.0), 2.0)
        self.assertClose(record.cs_level, 0.02, 1e-10)
        self.assertClose(record.ps_ratio, 0.4, 1e-10)
        self.assertClose(record.eps_matched, 0.6, 1e-8)
        self.assertClose(record.ps_diff, 0.46, 1e-8)
        self.assertTrue(record.holds())
        self.assertClose(record.as_dict()['ps_gain'], 0.06, 1e-8)

    def test_gamma_one(self):
        record = dominance_compare(Uniform(1.0), 1.0)
        self.assertEqual(record.eps_matched, 0.0)
        self.assertClose(record.ps_diff, record.ps_ratio, 1e-14)


class TestNonRegularModel(FairPriceTestCase):
    """Two well separated logistic components give a non-monotone virtual value."""

    def test_scan_is_used_and_flagged(self):
        model = MixtureLogistic((2.0, 20.0), -1.0)
        solution = solve_difference(model, 1.0)
        self.assertFalse(solution.regular)
        self.assertTrue(any('not certified' in w for w in solution.warnings))
        self.assertClose(solution.band.width, 1.0, 1e-12)
        self.assertLess(abs(solution.foc_residual), 1e-8)
        self.assertFalse(solution.as_dict()['regular'])


@pytest.mark.unit
def test_unmatched_consumer_surplus(mocker):
    """A ratio consumer surplus above every difference cap's cannot be matched."""
    ratio = Mock(cs=10.0, ps=0.0, ts=10.0)
    ratio.policy = Ratio(2.0)
    mocker.patch("fairprice.solver.solve_ratio", return_value=ratio)
    with pytest.raises(MatchingError) as excinfo:
        dominance_compare(Uniform(1.0), 2.0)
    low, high = excinfo.value.attained
    assert low < high < 10.0


@pytest.mark.unit
def test_exponential_lower_price_fixture(exponential_model):
    solution = solve_difference(exponential_model, 0.5)
    assert abs(solution.band.p_l - math.exp(-0.5)) < 1e-10


@pytest.mark.unit
def test_powerlaw_threshold_fixture(powerlaw_model):
    eps0 = epsilon_threshold(powerlaw_model)
    assert abs(eps0 - 0.606) < 5e-3
    assert abs(solve_difference(powerlaw_model, eps0).band.p_l - eps0 / 2.0) < 1e-8


@pytest.mark.unit
def test_coke_preset_is_regular(coke_model):
    solution = solve_ratio(coke_model, 2.0)
    assert solution.regular
    assert solution.band.p_u <= 2.0 * solution.band.p_l * (1.0 + 1e-12)
