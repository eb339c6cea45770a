"""
Shared numerical kernel: bracketed root finding and adaptive quadrature.

Both wrap scipy (``optimize.root_scalar`` with Brent's method and
``integrate.quad``) and turn its diagnostics into package errors.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize

from .errors import AccuracyError, BracketError, ConfigurationError, ConvergenceError, DivergenceError

logger = logging.getLogger(__name__)

# scipy rejects rtol below 4 machine epsilons
_MIN_BRENT_RTOL = 4.0 * float(np.finfo(float).eps)


@dataclass(frozen=True)
class RootConfig:
    """Tolerances for :func:`find_root_monotone`.

    Attributes:
        abs_tol: Absolute tolerance on the bracket half-width.
        rel_tol: Relative tolerance on the bracket half-width.
        max_iter: Iteration budget.
    """

    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigurationError(
                f"Root tolerances must be positive, got abs={self.abs_tol}, rel={self.rel_tol}")
        if int(self.max_iter) < 8:
            raise ConfigurationError(f"max_iter must be at least 8, got {self.max_iter}")


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances for :func:`integrate`. ``max_depth`` bounds the number of
    adaptive subintervals."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_depth: int = 50

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ConfigurationError(
                f"Quadrature tolerances must be positive, got abs={self.abs_tol}, rel={self.rel_tol}")
        if int(self.max_depth) < 1:
            raise ConfigurationError(f"max_depth must be positive, got {self.max_depth}")


def find_root_monotone(g: Callable[[float], float], bracket: Tuple[float, float],
                       cfg: RootConfig = RootConfig()) -> float:
    """
    Find the sign change of a continuous monotone function inside a bracket.

    Args:
        g: Scalar function. Its values at the bracket ends must differ in sign
            (a zero at either end is accepted and returned directly).
        bracket: ``(lo, hi)`` search interval, in either order.
        cfg: Tolerances and iteration budget.

    Returns:
        x within ``abs_tol + rel_tol*|x|`` of the sign change.

    Raises:
        BracketError: Endpoint values share a sign or are not finite.
        ConvergenceError: ``max_iter`` exhausted. Carries the last bracket.
    """
    a, b = float(bracket[0]), float(bracket[1])
    fa, fb = float(g(a)), float(g(b))

    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise BracketError(f"Non-finite function value at bracket ({a}, {b}): g={fa}, {fb}",
                           (a, b), (fa, fb))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise BracketError(f"No sign change on ({a}, {b}): g(lo)={fa}, g(hi)={fb}",
                           (a, b), (fa, fb))

    tracker = _SignBracket(a, b, fa)
    result = optimize.root_scalar(tracker.wrap(g), bracket=tracker.bracket, method='brentq',
                                  xtol=cfg.abs_tol, rtol=max(cfg.rel_tol, _MIN_BRENT_RTOL),
                                  maxiter=int(cfg.max_iter))
    if not result.converged:
        raise ConvergenceError(f"Root finder did not converge in {cfg.max_iter} iterations: {result.flag}",
                               bracket=tracker.bracket)
    logger.debug(f"Root {result.root!r} after {result.iterations} iterations")
    return float(result.root)


class _SignBracket:
    """Tightest sign-change bracket seen so far; valid because g is monotone."""

    def __init__(self, a: float, b: float, fa: float):
        self.same, self.other = a, b
        self.positive = fa > 0

    def wrap(self, g: Callable[[float], float]) -> Callable[[float], float]:
        def tracked(x: float) -> float:
            fx = float(g(x))
            lo, hi = self.bracket
            if lo <= x <= hi and fx != 0.0 and math.isfinite(fx):
                if (fx > 0) == self.positive:
                    self.same = x
                else:
                    self.other = x
            return fx
        return tracked

    @property
    def bracket(self) -> Tuple[float, float]:
        lo, hi = sorted((self.same, self.other))
        return lo, hi


def integrate(f: Callable[[float], float], a: float, b: float,
              cfg: QuadConfig = QuadConfig()) -> float:
    """
    Adaptive quadrature of ``f`` over ``[a, b]``; ``b`` may be ``inf``.

    Infinite upper limits use QUADPACK's semi-infinite transformation.

    Raises:
        AccuracyError: Subdivision limit hit or integrand too irregular.
        DivergenceError: QUADPACK reports a divergent integral.
    """
    a, b = float(a), float(b)
    if b == a:
        return 0.0
    if b < a:
        return -integrate(f, b, a, cfg)

    with warnings.catch_warnings():
        warnings.simplefilter('ignore', sp_integrate.IntegrationWarning)
        value, abserr, info, *rest = sp_integrate.quad(
            f, a, b, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
            limit=int(cfg.max_depth), full_output=1)

    # quad appends a message only when QUADPACK reports a problem
    ier = _quadpack_code(rest[0]) if rest else 0

    if ier == 0:
        return float(value)
    if ier == 2:
        logger.debug(f"Round-off limits accuracy on [{a}, {b}]: {value} +/- {abserr}")
        return float(value)
    if ier == 5:
        raise DivergenceError(f"Integral on [{a}, {b}] appears divergent (estimate {value})")
    raise AccuracyError(
        f"Quadrature on [{a}, {b}] failed to reach tolerance after {info.get('last', '?')} subintervals",
        estimate=float(value), error_bound=float(abserr))


def _quadpack_code(message: str) -> int:
    lowered = str(message).lower()
    if 'subdivisions' in lowered:
        return 1
    if 'does not converge' in lowered:
        return 4
    if 'divergent' in lowered:
        return 5
    if 'roundoff' in lowered or 'round-off' in lowered:
        return 2
    return 3
