"""
Brute-force band search used to validate the solver.

Producer surplus is evaluated along the policy constraint for every lower
price on a uniform grid, then once more on a fine grid spanning the two cells
around the coarse maximiser. No first-order conditions are used.
"""

import logging
from typing import Optional

import numpy as np

from .config import GridSpec, Tolerances, get_tolerances
from .demand import DemandModel, effective_upper
from .solver import Difference, Policy, Solution, cost_shift
from .welfare import PriceBand, producer_surplus, report

logger = logging.getLogger(__name__)

ORACLE_TAIL_MASS = 1e-3

__all__ = ['GridSpec', 'ORACLE_TAIL_MASS', 'brute_force_solve']


def _upper_prices(policy: Policy, p_l: np.ndarray, c: float) -> np.ndarray:
    if isinstance(policy, Difference):
        return p_l + policy.eps
    return c + policy.gamma * (p_l - c)


def _producer_surplus_grid(model: DemandModel, p_l: np.ndarray, p_u: np.ndarray, c: float,
                           tol: Tolerances) -> np.ndarray:
    feasible = p_u <= model.support.upper
    ps = np.full(p_l.shape, -np.inf)
    if model.has_closed_form_tail:
        lo, hi = p_l[feasible], p_u[feasible]
        T, S = model.tail_partial_expectation, model.survival
        ps[feasible] = (hi - c) * S(hi) + (T(lo) - T(hi)) - c * (S(lo) - S(hi))
        return ps
    for i in np.flatnonzero(feasible):
        ps[i] = producer_surplus(model, PriceBand(float(p_l[i]), float(p_u[i])), c, tol)
    return ps


def _best(model: DemandModel, policy: Policy, p_l: np.ndarray, c: float, tol: Tolerances) -> int:
    ps = _producer_surplus_grid(model, p_l, _upper_prices(policy, p_l, c), c, tol)
    return int(np.argmax(ps))


def brute_force_solve(model: DemandModel, policy: Policy, c: float = 0.0,
                      grid: Optional[GridSpec] = None, tol: Optional[Tolerances] = None) -> Solution:
    """
    Maximise producer surplus over lower prices on a grid.

    Args:
        model: Valuation distribution.
        policy: Difference or ratio cap.
        c: Marginal cost.
        grid: Number of lower prices and their span above c. The span defaults
            to the point where the shifted survival falls to 1e-3.
        tol: Tolerance bundle for welfare evaluation.

    Returns:
        Solution for the best grid band; ``foc_residual`` reports how far the
        grid optimum is from the first-order condition.
    """
    grid = grid or GridSpec()
    grid.require(101, 'Brute-force oracle')
    tol = get_tolerances(tol)
    shifted = cost_shift(model, c, tol)
    span = grid.upper if grid.upper is not None else effective_upper(shifted, grid.tail_mass or ORACLE_TAIL_MASS)
    n = int(grid.n_points)

    coarse = np.linspace(c, c + span, n)
    i = _best(model, policy, coarse, c, tol)
    fine = np.linspace(coarse[max(i - 1, 0)], coarse[min(i + 1, n - 1)], n)
    j = _best(model, policy, fine, c, tol)

    p_l = float(fine[j])
    p_u = float(_upper_prices(policy, np.asarray(p_l), c))
    band = PriceBand(p_l, p_u)

    q = p_l - c
    S, f = shifted.survival, shifted.pdf
    if isinstance(policy, Difference):
        residual = S(q + policy.eps) - q * f(q)
    else:
        residual = policy.gamma * S(policy.gamma * q) - q * f(q)

    logger.debug(f"Oracle band {band} for {policy} on {model.describe()} (coarse step {span / (n - 1):.3g})")
    return Solution(policy=policy, band=band, welfare=report(model, band, c, tol),
                    foc_residual=float(residual), binding=True)
