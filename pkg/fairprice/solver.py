"""
Optimal price bands under difference and ratio caps.

The seller's problem is solved on the cost-shifted model (valuations net of
marginal cost c, conditioned on V >= c), where the optimal lower price is the
unique root of a monotone first-order condition:

    difference cap eps:  G(p) = S(p + eps) - p f(p)
    ratio cap gamma:     H(q) = gamma S(gamma q) - q f(q)

Bands are shifted back by c and welfare is evaluated on the original model.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Callable, ClassVar, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .config import Tolerances, get_tolerances
from .demand import DemandModel, RegularityReport, check_regularity, effective_upper
from .errors import (BracketError, CapabilityError, ConfigurationError, DomainError, EmptyMarketError,
                     FairPriceError, MatchingError, ParameterError, PolicyRangeError, RegularityError)
from .numerics import find_root_monotone
from .welfare import PriceBand, WelfareReport, efficient_trade_surplus, report, tradeoff_bounds

logger = logging.getLogger(__name__)

# eps is capped just below U_eff - c
EPS_CAP_FRACTION = 1e-9
# lowest shifted lower price, as a fraction of U_eff - c, that the ratio solver resolves
MIN_PRICE_FRACTION = 1e-4
_SCAN_POINTS = 257


@dataclass(frozen=True)
class Difference:
    """Price-difference cap: p_u - p_l <= eps."""

    eps: float
    kind: ClassVar[str] = 'diff'

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps >= 0):
            raise PolicyRangeError(f"Difference cap must be finite and >= 0, got {self.eps}")

    @property
    def param(self) -> float:
        return self.eps


@dataclass(frozen=True)
class Ratio:
    """Cost-adjusted price-ratio cap: p_u - c <= gamma (p_l - c)."""

    gamma: float
    kind: ClassVar[str] = 'ratio'

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 1):
            raise PolicyRangeError(f"Ratio cap must be finite and >= 1, got {self.gamma}")

    @property
    def param(self) -> float:
        return self.gamma


Policy = Union[Difference, Ratio]

POLICY_KINDS = {Difference.kind: Difference, Ratio.kind: Ratio}


def make_policy(kind: str, param: float) -> Policy:
    try:
        return POLICY_KINDS[kind](float(param))
    except KeyError:
        raise ConfigurationError(f"Unknown policy '{kind}' (expected diff or ratio)")


@dataclass
class Solution:
    """Solved band for one policy.

    Attributes:
        policy: The cap that was imposed.
        band: Optimal (p_l, p_u) in original prices.
        welfare: Surpluses on the original model.
        foc_residual: First-order condition at the shifted lower price.
        binding: Whether the cap is active at the optimum.
        regular: False when the model failed the regularity certificate.
        warnings: Diagnostics attached during the solve.
    """

    policy: Policy
    band: PriceBand
    welfare: WelfareReport
    foc_residual: float
    binding: bool
    regular: bool = True
    warnings: List[str] = field(default_factory=list)

    @property
    def ps(self) -> float:
        return self.welfare.ps

    @property
    def cs(self) -> float:
        return self.welfare.cs

    @property
    def ts(self) -> float:
        return self.welfare.ts

    def as_dict(self) -> Dict[str, Any]:
        return {
            'policy': self.policy.kind,
            'param': self.policy.param,
            'cost': self.welfare.cost,
            'p_l': self.band.p_l,
            'p_u': self.band.p_u,
            'ps': self.ps,
            'cs': self.cs,
            'ts': self.ts,
            'foc_residual': self.foc_residual,
            'binding': self.binding,
            'regular': self.regular,
            'warnings': list(self.warnings),
        }


class Sensitivity(NamedTuple):
    """Derivatives of the band endpoints with respect to the policy parameter."""

    d_lower: float
    d_upper: float


@dataclass
class SweepRow:
    param: float
    solution: Optional[Solution] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.solution is not None


@dataclass
class SweepTable:
    """Trade-off curve: one row per policy parameter, ascending."""

    rows: List[SweepRow]
    policy_kind: str
    model: str
    cost: float
    efficient_trade: Optional[float] = None
    uniform_ps: Optional[float] = None
    uniform_cs: Optional[float] = None
    tolerances: str = ''

    @property
    def succeeded(self) -> int:
        return sum(1 for row in self.rows if row.ok)

    def column(self, name: str) -> np.ndarray:
        """Numeric column across rows; failed rows give NaN."""
        values = []
        for row in self.rows:
            if name == 'param':
                values.append(row.param)
            elif row.solution is None:
                values.append(math.nan)
            else:
                values.append(row.solution.as_dict()[name])
        return np.asarray(values, dtype=float)

    def records(self) -> List[Dict[str, Any]]:
        out = []
        for row in self.rows:
            record: Dict[str, Any] = {'param': row.param}
            for name in ('p_l', 'p_u', 'cs', 'ps', 'ts'):
                record[name] = row.solution.as_dict()[name] if row.ok else math.nan
            record['error'] = row.error or ''
            out.append(record)
        return out


@dataclass(frozen=True)
class DominanceRecord:
    """Difference policy matched to a ratio policy at equal consumer surplus."""

    cs_level: float
    eps_matched: float
    gamma: float
    ps_diff: float
    ps_ratio: float
    ts_diff: float
    ts_ratio: float

    def holds(self, slack: float = 1e-8) -> bool:
        return self.ps_diff >= self.ps_ratio - slack and self.ts_diff >= self.ts_ratio - slack

    def as_dict(self) -> Dict[str, Any]:
        doc = asdict(self)
        doc['ps_gain'] = self.ps_diff - self.ps_ratio
        doc['ts_gain'] = self.ts_diff - self.ts_ratio
        return doc


# --- problem setup -------------------------------------------------------------

@dataclass(frozen=True)
class _Problem:
    model: DemandModel
    shifted: DemandModel
    cost: float
    upper: float
    tol: Tolerances
    warnings: Tuple[str, ...]

    @property
    def regular(self) -> bool:
        return not self.warnings


def cost_shift(model: DemandModel, c: float, tol: Optional[Tolerances] = None) -> DemandModel:
    """
    Reduce marginal cost c to the zero-cost problem.

    Returns the distribution of V - c given V >= c: f~(v) = f(v+c)/S(c),
    S~(v) = S(v+c)/S(c), h~(v) = h(v+c). ``c = 0`` returns ``model`` itself.

    Raises:
        ParameterError: Negative or non-finite cost.
        EmptyMarketError: No demand above c.
    """
    c = float(c)
    if not math.isfinite(c) or c < 0:
        raise ParameterError(f"Marginal cost must be finite and >= 0, got {c}")
    if c == 0.0:
        return model
    tol = get_tolerances(tol)
    if c >= model.support.upper or not model.survival(c) > 0:
        raise EmptyMarketError(f"S({c}) = 0 for {model.describe()}: nobody values the good above cost")
    if not model.support.is_finite and c >= effective_upper(model, tol.tail_mass):
        raise EmptyMarketError(f"Cost {c} lies beyond the effective support of {model.describe()}")
    return model.shifted(c)


@lru_cache(maxsize=256)
def _cached_certificate(shifted: DemandModel) -> RegularityReport:
    return check_regularity(shifted, k=0.0)


def regularity_certificate(shifted: DemandModel) -> RegularityReport:
    """0-strong regularity certificate of a cost-shifted model, cached per model."""
    try:
        return _cached_certificate(shifted)
    except TypeError:
        return check_regularity(shifted, k=0.0)


@lru_cache(maxsize=256)
def _warn_once(message: str) -> None:
    logger.warning(message)


def _prepare(model: DemandModel, c: float, tol: Optional[Tolerances]) -> _Problem:
    tol = get_tolerances(tol)
    shifted = cost_shift(model, c, tol)
    upper = effective_upper(shifted, tol.tail_mass)
    warnings: Tuple[str, ...] = ()
    certificate = regularity_certificate(shifted)
    if not certificate.is_k_strongly_regular:
        message = (f"{model.describe()} is not certified {c:g}-strongly regular on the diagnostic grid; "
                   f"using the first sign change, uniqueness not guaranteed")
        _warn_once(message)
        warnings = (message,)
    return _Problem(model, shifted, float(c), upper, tol, warnings)


def _first_sign_change(g: Callable[[float], float], lo: float, hi: float) -> Tuple[float, float]:
    xs = np.linspace(lo, hi, _SCAN_POINTS)
    prev_x, prev_g = xs[0], g(xs[0])
    for x in xs[1:]:
        gx = g(x)
        if gx == 0 or (gx > 0) != (prev_g > 0):
            return float(prev_x), float(x)
        prev_x, prev_g = x, gx
    return lo, hi


def _root(g: Callable[[float], float], lo: float, hi: float, problem: _Problem, what: str) -> float:
    if not problem.regular:
        lo, hi = _first_sign_change(g, lo, hi)
    try:
        return find_root_monotone(g, (lo, hi), problem.tol.root)
    except BracketError as exc:
        raise RegularityError(
            f"{what} condition has no sign change on [{lo:g}, {hi:g}] for {problem.model.describe()} "
            f"at cost {problem.cost:g}") from exc


def _eps_cap(problem: _Problem) -> float:
    return (1.0 - EPS_CAP_FRACTION) * problem.upper


def max_epsilon(model: DemandModel, c: float = 0.0, tol: Optional[Tolerances] = None) -> float:
    """Largest difference cap that is solved rather than reported as perfect discrimination."""
    return _eps_cap(_prepare(model, c, tol))


def max_gamma(model: DemandModel, c: float = 0.0, tol: Optional[Tolerances] = None) -> float:
    """Largest ratio cap that is solved rather than reported as perfect discrimination."""
    return 1.0 / MIN_PRICE_FRACTION


# --- solves --------------------------------------------------------------------

def _shifted_uniform_price(problem: _Problem) -> float:
    return _root(problem.shifted.virtual_value, 0.0, problem.upper, problem, 'Uniform-price')


def _difference_lower(problem: _Problem, eps: float) -> float:
    S, f = problem.shifted.survival, problem.shifted.pdf
    return _root(lambda p: S(p + eps) - p * f(p), 0.0, problem.upper - eps, problem, 'Difference-cap')


def _ratio_lower(problem: _Problem, gamma: float) -> float:
    S, f = problem.shifted.survival, problem.shifted.pdf
    return _root(lambda q: gamma * S(gamma * q) - q * f(q), 0.0, problem.upper / gamma, problem, 'Ratio-cap')


def _finish(problem: _Problem, policy: Policy, lower: float, upper: float,
            residual: float, binding: bool) -> Solution:
    c = problem.cost
    band = PriceBand(lower + c, min(upper + c, problem.model.support.upper))
    return Solution(policy=policy, band=band, welfare=report(problem.model, band, c, problem.tol),
                    foc_residual=float(residual), binding=binding, regular=problem.regular,
                    warnings=list(problem.warnings))


def _uniform_solution(problem: _Problem, policy: Policy) -> Solution:
    m = problem.shifted
    p = _shifted_uniform_price(problem)
    return _finish(problem, policy, p, p, m.survival(p) - p * m.pdf(p), binding=True)


def _perfect_discrimination(problem: _Problem, policy: Policy) -> Solution:
    logger.debug(f"{policy} is at the perfect-discrimination endpoint of {problem.model.describe()}")
    return _finish(problem, policy, 0.0, problem.upper, 0.0, binding=False)


def solve_uniform_price(model: DemandModel, c: float = 0.0, tol: Optional[Tolerances] = None) -> Solution:
    """
    Monopoly price: the zero of the shifted virtual value, returned as band (p, p).

    Raises:
        RegularityError: The virtual value has no sign change on (0, U_eff).
    """
    return _uniform_solution(_prepare(model, c, tol), Difference(0.0))


def solve_difference(model: DemandModel, eps: float, c: float = 0.0,
                     tol: Optional[Tolerances] = None) -> Solution:
    """
    Revenue-maximising band subject to p_u - p_l <= eps.

    Args:
        model: Valuation distribution.
        eps: Difference cap, 0 <= eps < U_eff - c.
        c: Marginal cost.
        tol: Tolerance bundle; environment/defaults when omitted.

    Raises:
        PolicyRangeError: eps outside [0, U_eff - c).
        RegularityError: First-order condition without a sign change.
    """
    policy = Difference(float(eps))
    problem = _prepare(model, c, tol)
    if policy.eps >= problem.upper:
        raise PolicyRangeError(f"eps={policy.eps:g} must be below U_eff - c = {problem.upper:g}")
    if policy.eps == 0.0:
        return _uniform_solution(problem, policy)
    if policy.eps > _eps_cap(problem):
        return _perfect_discrimination(problem, policy)

    m = problem.shifted
    p = _difference_lower(problem, policy.eps)
    residual = m.survival(p + policy.eps) - p * m.pdf(p)
    return _finish(problem, policy, p, p + policy.eps, residual, binding=True)


def solve_ratio(model: DemandModel, gamma: float, c: float = 0.0,
                tol: Optional[Tolerances] = None) -> Solution:
    """
    Revenue-maximising band subject to p_u - c <= gamma (p_l - c).

    Raises:
        PolicyRangeError: gamma < 1.
        RegularityError: First-order condition without a sign change.
    """
    policy = Ratio(float(gamma))
    problem = _prepare(model, c, tol)
    if policy.gamma == 1.0:
        return _uniform_solution(problem, policy)
    if policy.gamma > max_gamma(model, c, tol):
        return _perfect_discrimination(problem, policy)

    m = problem.shifted
    q = _ratio_lower(problem, policy.gamma)
    residual = policy.gamma * m.survival(policy.gamma * q) - q * m.pdf(q)
    return _finish(problem, policy, q, policy.gamma * q, residual, binding=True)


_SOLVERS: Dict[str, Callable[..., Solution]] = {
    Difference.kind: solve_difference,
    Ratio.kind: solve_ratio,
}


def solve(model: DemandModel, policy: Policy, c: float = 0.0, tol: Optional[Tolerances] = None) -> Solution:
    return _SOLVERS[policy.kind](model, policy.param, c, tol)


def epsilon_threshold(model: DemandModel, c: float = 0.0, tol: Optional[Tolerances] = None) -> float:
    """
    Root of eps - 2 p_l*(eps) on the shifted problem.

    Above this cap the upper price rises with eps for every strongly regular
    model; the root never exceeds twice the shifted uniform price.
    """
    problem = _prepare(model, c, tol)
    p_star = _shifted_uniform_price(problem)
    hi = min(2.0 * p_star, _eps_cap(problem))

    def gap(eps: float) -> float:
        lower = p_star if eps == 0.0 else _difference_lower(problem, eps)
        return eps - 2.0 * lower

    eps0 = _root(gap, 0.0, hi, problem, 'Threshold')
    logger.debug(f"eps0={eps0!r} for {model.describe()} at cost {c:g}")
    return eps0


def sensitivity(model: DemandModel, solution: Solution, c: float = 0.0,
                tol: Optional[Tolerances] = None) -> Sensitivity:
    """
    Implicit-function derivatives of (p_l, p_u) in the policy parameter.

    Raises:
        CapabilityError: Model without a density derivative.
        PolicyRangeError: Solution at the perfect-discrimination endpoint.
    """
    if not model.has_pdf_derivative:
        raise CapabilityError(f"{model.describe()} does not provide f'; sensitivities need it")
    if not solution.binding:
        raise PolicyRangeError('Sensitivities are undefined at the perfect-discrimination endpoint')

    m = cost_shift(model, c, tol)
    f, S, df = m.pdf, m.survival, m.pdf_derivative
    q = solution.band.p_l - c
    policy = solution.policy

    if isinstance(policy, Difference):
        top = f(q + policy.eps)
        denom = top + f(q) + q * df(q)
        _nonzero(denom)
        d_lower = -top / denom
        return Sensitivity(d_lower, d_lower + 1.0)

    gamma = policy.gamma
    x = gamma * q
    denom = gamma * gamma * f(x) + f(q) + q * df(q)
    _nonzero(denom)
    return Sensitivity((S(x) - x * f(x)) / denom, (q * q * df(q) + 2.0 * q * f(q)) / denom)


def _nonzero(denom: float) -> None:
    if denom == 0 or not math.isfinite(denom):
        raise DomainError(f"Degenerate second-order term ({denom}) in the sensitivity formula")


def sweep(model: DemandModel, policy_kind: str, params: Sequence[float], c: float = 0.0,
          tol: Optional[Tolerances] = None, max_workers: Optional[int] = None) -> SweepTable:
    """
    Solve one row per policy parameter.

    Failures are recorded in the row instead of aborting. Rows run on a
    thread pool when ``max_workers > 1``; output order follows ``params``.

    Raises:
        ConfigurationError: Unknown policy or parameters not strictly ascending.
    """
    if policy_kind not in _SOLVERS:
        raise ConfigurationError(f"Unknown policy '{policy_kind}' (expected diff or ratio)")
    values = [float(p) for p in params]
    if not values:
        raise ConfigurationError('Sweep needs at least one parameter value')
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigurationError('Sweep parameters must be strictly ascending')

    tol = get_tolerances(tol)
    solver = _SOLVERS[policy_kind]

    def run(param: float) -> SweepRow:
        try:
            return SweepRow(param, solution=solver(model, param, c, tol))
        except FairPriceError as exc:
            logger.warning(f"Sweep row {policy_kind}={param:g} failed: {exc}")
            return SweepRow(param, error=f"{type(exc).__name__}: {exc}")

    if max_workers and max_workers > 1 and len(values) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(run, values))
    else:
        rows = [run(value) for value in values]

    try:
        efficient = efficient_trade_surplus(model, c, tol)
    except FairPriceError as exc:
        logger.warning(f"Efficient-trade surplus unavailable: {exc}")
        efficient = None
    try:
        bounds = tradeoff_bounds(model, solve_uniform_price(model, c, tol).band, c, tol)
        uniform_ps, uniform_cs = bounds.uniform_ps, bounds.uniform_cs
    except FairPriceError as exc:
        logger.warning(f"Uniform-price surplus unavailable: {exc}")
        uniform_ps = uniform_cs = None

    table = SweepTable(rows=rows, policy_kind=policy_kind, model=model.describe(), cost=float(c),
                       efficient_trade=efficient, uniform_ps=uniform_ps, uniform_cs=uniform_cs,
                       tolerances=tol.describe())
    logger.info(f"Sweep over {len(rows)} {policy_kind} values: {table.succeeded} solved")
    return table


def dominance_compare(model: DemandModel, gamma: float, c: float = 0.0,
                      tol: Optional[Tolerances] = None) -> DominanceRecord:
    """
    Match the ratio cap gamma with the difference cap giving the same consumer surplus.

    The difference policy's consumer surplus is inverted on the range where it
    decreases in eps: all caps for MHR models, caps above the threshold
    otherwise.

    Raises:
        MatchingError: The ratio policy's consumer surplus lies outside the attained range.
    """
    tol = get_tolerances(tol)
    ratio = solve_ratio(model, gamma, c, tol)
    level = ratio.cs

    if ratio.policy.gamma == 1.0:
        diff = solve_difference(model, 0.0, c, tol)
        return DominanceRecord(level, 0.0, 1.0, diff.ps, ratio.ps, diff.ts, ratio.ts)

    problem = _prepare(model, c, tol)
    mhr = regularity_certificate(problem.shifted).is_mhr
    lo = 0.0 if mhr else epsilon_threshold(model, c, tol)
    hi = _eps_cap(problem)

    def cs_at(eps: float) -> float:
        return solve_difference(model, eps, c, tol).cs

    top, bottom = cs_at(lo), cs_at(hi)
    if not bottom <= level <= top:
        raise MatchingError(
            f"Consumer surplus {level:.6g} of ratio cap {gamma:g} is outside the range "
            f"[{bottom:.6g}, {top:.6g}] reachable by difference caps in [{lo:g}, {hi:g}]",
            attained=(bottom, top))

    try:
        eps = find_root_monotone(lambda e: cs_at(e) - level, (lo, hi), tol.root)
    except BracketError as exc:
        raise MatchingError(f"Could not match consumer surplus {level:.6g}: {exc}",
                            attained=(bottom, top)) from exc

    diff = solve_difference(model, eps, c, tol)
    record = DominanceRecord(level, eps, float(gamma), diff.ps, ratio.ps, diff.ts, ratio.ts)
    if not record.holds(tol.compare):
        logger.warning(f"Difference cap does not dominate at gamma={gamma:g}: {record}")
    return record
