"""
Unit tests for the brute-force band search.
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from fairprice.config import GridSpec
from fairprice.demand import DemandModel, Exponential, Support, Uniform
from fairprice.errors import ConfigurationError
from fairprice.oracle import brute_force_solve
from fairprice.solver import Difference, Ratio, solve
from tests import FairPriceTestCase


class QuadratureUniform(DemandModel):
    """Uniform{1} without closed forms; the oracle falls back to per-band welfare."""

    @property
    def support(self) -> Support:
        return Support(1.0)

    def _pdf(self, v):
        return np.ones_like(v)

    def _survival(self, v):
        return 1.0 - v


class TestBruteForceSolve(FairPriceTestCase):

    def test_uniform_difference(self):
        result = brute_force_solve(Uniform(1.0), Difference(0.3))
        self.assertClose(result.band.p_l, 0.35, 1e-6)
        self.assertClose(result.band.width, 0.3, 1e-12)
        self.assertClose(result.ps, solve(Uniform(1.0), Difference(0.3)).ps, 1e-10)

    def test_never_beats_the_solver(self):
        for model, policy, c in ((Exponential(1.0), Difference(0.7), 0.0),
                                 (Exponential(1.0), Ratio(2.5), 0.4),
                                 (Uniform(2.0), Ratio(1.5), 0.5)):
            with self.subTest(model=model.describe(), policy=policy, c=c):
                exact = solve(model, policy, c)
                grid = brute_force_solve(model, policy, c)
                self.assertLessEqual(grid.ps, exact.ps + 1e-12)
                self.assertLessEqual(exact.ps - grid.ps, 1e-8 * max(1.0, exact.ps))

    def test_ratio_band_respects_cost(self):
        result = brute_force_solve(Uniform(1.0), Ratio(2.0), c=0.2)
        self.assertClose(result.band.ratio(0.2), 2.0, 1e-9)
        self.assertClose(result.band.p_l, 0.52, 1e-5)

    def test_quadrature_fallback(self):
        result = brute_force_solve(QuadratureUniform(), Difference(0.4), grid=GridSpec(n_points=201, upper=1.0))
        self.assertClose(result.band.p_l, 0.3, 1e-4)
        self.assert_welfare_identity(result)

    def test_grid_too_coarse(self):
        with self.assertRaises(ConfigurationError):
            brute_force_solve(Uniform(1.0), Difference(0.3), grid=GridSpec(n_points=50))
