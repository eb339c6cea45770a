"""
Surplus accounting for a two-price band.

Under a band ``(p_l, p_u)`` the seller charges p_u to consumers valuing the
good above p_u, charges each consumer with valuation in ``[p_l, p_u]`` their
valuation, and does not sell below p_l. With marginal cost c:

    PS = (p_u - c) S(p_u) + int_{p_l}^{p_u} (v - c) f(v) dv
    CS = int_{p_u}^{U} (v - p_u) f(v) dv
    TS = int_{p_l}^{U} (v - c) f(v) dv

Integrals use the model's closed-form partial expectation when it has one and
adaptive quadrature otherwise.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from .config import Tolerances, get_tolerances
from .demand import DemandModel
from .errors import DivergenceError, DomainError, InternalConsistencyError
from .numerics import QuadConfig, integrate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PriceBand:
    """Lower and upper price of the piecewise strategy."""

    p_l: float
    p_u: float

    @property
    def width(self) -> float:
        return self.p_u - self.p_l

    def ratio(self, c: float = 0.0) -> float:
        """Cost-adjusted ratio (p_u - c)/(p_l - c)."""
        low = self.p_l - c
        return math.inf if low <= 0 else (self.p_u - c) / low

    def offset(self, c: float) -> 'PriceBand':
        return PriceBand(self.p_l + c, self.p_u + c)

    def validate(self, model: DemandModel, c: float) -> None:
        """
        Check ``c <= p_l <= p_u <= U``.

        Raises:
            DomainError: On any violation or non-finite price.
        """
        if not (math.isfinite(self.p_l) and math.isfinite(self.p_u)):
            raise DomainError(f"Band prices must be finite, got {self}")
        if self.p_l < c:
            raise DomainError(f"Lower price {self.p_l} is below marginal cost {c}")
        if self.p_u < self.p_l:
            raise DomainError(f"Upper price {self.p_u} is below lower price {self.p_l}")
        if self.p_u > model.support.upper:
            raise DomainError(f"Upper price {self.p_u} exceeds the support bound {model.support.upper}")


@dataclass(frozen=True)
class WelfareReport:
    """Producer, consumer and total surplus of one band."""

    band: PriceBand
    cost: float
    ps: float
    cs: float
    ts: float

    def as_dict(self) -> Dict[str, Any]:
        doc = asdict(self)
        doc.update(doc.pop('band'))
        return doc


@dataclass(frozen=True)
class TradeoffBounds:
    """Feasible (CS, PS) region: CS >= 0, PS >= uniform-price PS, TS <= efficient trade."""

    uniform_ps: float
    uniform_cs: float
    efficient_trade: float


def _check_model(model: DemandModel) -> None:
    if not model.finite_mean:
        raise DivergenceError(f"{model.describe()} has no finite mean; welfare integrals diverge")


def _weighted_mass(model: DemandModel, lo: float, hi: float, shift: float, quad: QuadConfig) -> float:
    """int_lo^hi (v - shift) f(v) dv; ``hi`` may be the support's upper bound."""
    if hi <= lo:
        return 0.0
    if model.has_closed_form_tail:
        tail = model.tail_partial_expectation(lo) - model.tail_partial_expectation(hi)
        return tail - shift * (model.survival(lo) - model.survival(hi))
    return integrate(lambda v: (v - shift) * model.pdf(v), lo, hi, quad)


def _nonnegative(value: float, label: str, scale: float, tol: Tolerances) -> float:
    if value >= 0.0:
        return value
    if value >= -tol.compare * max(1.0, scale):
        return 0.0
    raise InternalConsistencyError(f"{label} is negative ({value})")


def producer_surplus(model: DemandModel, band: PriceBand, c: float,
                     tol: Optional[Tolerances] = None) -> float:
    """Seller revenue above cost under ``band``."""
    tol = get_tolerances(tol)
    _check_model(model)
    band.validate(model, c)
    value = (band.p_u - c) * model.survival(band.p_u) + _weighted_mass(model, band.p_l, band.p_u, c, tol.quad)
    return _nonnegative(value, 'Producer surplus', value, tol)


def consumer_surplus(model: DemandModel, band: PriceBand, c: float,
                     tol: Optional[Tolerances] = None) -> float:
    """Buyer surplus: only consumers above p_u keep any."""
    tol = get_tolerances(tol)
    _check_model(model)
    band.validate(model, c)
    value = _weighted_mass(model, band.p_u, model.support.upper, band.p_u, tol.quad)
    return _nonnegative(value, 'Consumer surplus', value, tol)


def total_surplus(model: DemandModel, band: PriceBand, c: float,
                  tol: Optional[Tolerances] = None) -> float:
    """Gains from trade with every consumer above p_l."""
    tol = get_tolerances(tol)
    _check_model(model)
    band.validate(model, c)
    value = _weighted_mass(model, band.p_l, model.support.upper, c, tol.quad)
    return _nonnegative(value, 'Total surplus', value, tol)


def efficient_trade_surplus(model: DemandModel, c: float, tol: Optional[Tolerances] = None) -> float:
    """E[1(V >= c)(V - c)], the ceiling on total surplus."""
    tol = get_tolerances(tol)
    _check_model(model)
    if c < 0:
        raise DomainError(f"Marginal cost must be non-negative, got {c}")
    if c >= model.support.upper:
        return 0.0
    return _weighted_mass(model, c, model.support.upper, c, tol.quad)


def report(model: DemandModel, band: PriceBand, c: float,
           tol: Optional[Tolerances] = None) -> WelfareReport:
    """
    All three surpluses for ``band`` with the CS + PS = TS identity checked.

    Raises:
        DomainError: Invalid band for cost ``c``.
        DivergenceError: Model without finite mean.
        InternalConsistencyError: Identity off by more than ``tol.welfare_rel``.
    """
    tol = get_tolerances(tol)
    ps = producer_surplus(model, band, c, tol)
    cs = consumer_surplus(model, band, c, tol)
    ts = total_surplus(model, band, c, tol)

    gap = abs(cs + ps - ts)
    if gap > tol.welfare_rel * max(1.0, abs(ts)):
        raise InternalConsistencyError(
            f"CS + PS != TS for {model.describe()} at {band}: gap {gap:.3e} (ps={ps}, cs={cs}, ts={ts})")
    return WelfareReport(band=band, cost=float(c), ps=ps, cs=cs, ts=ts)


def tradeoff_bounds(model: DemandModel, uniform_band: PriceBand, c: float,
                    tol: Optional[Tolerances] = None) -> TradeoffBounds:
    """Corners of the feasible consumer/producer surplus region given the uniform price band."""
    tol = get_tolerances(tol)
    uniform = report(model, uniform_band, c, tol)
    return TradeoffBounds(uniform_ps=uniform.ps, uniform_cs=uniform.cs,
                          efficient_trade=efficient_trade_surplus(model, c, tol))
