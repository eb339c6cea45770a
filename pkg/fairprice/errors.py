"""
Exception hierarchy for fairprice.

Every error carries the CLI exit code of its category so the command line
front end can map failures onto its stable contract:

    2  configuration (bad flags, invalid family parameters, bad tolerances)
    3  numeric or regularity failures inside the solver stack
    4  data problems while loading or fitting purchase records
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

EXIT_CONFIGURATION = 2
EXIT_NUMERICAL = 3
EXIT_DATA = 4


class FairPriceError(Exception):
    """Base class for all errors raised by the package."""

    exit_code: int = EXIT_NUMERICAL

    def details(self) -> Dict[str, Any]:
        """Extra machine-readable fields for the CLI error document."""
        return {}

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            'error': type(self).__name__,
            'message': str(self),
            'exit_code': self.exit_code,
        }
        payload.update(self.details())
        return payload


# --- configuration -----------------------------------------------------------

class ConfigurationError(FairPriceError, ValueError):
    """Invalid run configuration, grid or tolerance settings."""

    exit_code = EXIT_CONFIGURATION


class ParameterError(ConfigurationError):
    """A distribution family or helper received an invalid parameter."""


# --- numeric / regularity ----------------------------------------------------

class NumericalError(FairPriceError, ArithmeticError):
    """Base for failures of the numeric kernel and the solvers."""

    exit_code = EXIT_NUMERICAL


class DomainError(NumericalError, ValueError):
    """Argument outside the domain where the quantity is defined."""


class BracketError(NumericalError):
    """Root bracket whose endpoints share a sign."""

    def __init__(self, message: str, bracket: Tuple[float, float],
                 values: Tuple[float, float]):
        super().__init__(message)
        self.bracket = bracket
        self.values = values

    def details(self) -> Dict[str, Any]:
        return {'bracket': list(self.bracket), 'values': list(self.values)}


class ConvergenceError(NumericalError, RuntimeError):
    """Iteration limit reached. Carries the last bracket or iterate."""

    def __init__(self, message: str, bracket: Optional[Tuple[float, float]] = None,
                 last_iterate: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.bracket = bracket
        self.last_iterate = None if last_iterate is None else list(last_iterate)

    def details(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        if self.bracket is not None:
            out['bracket'] = list(self.bracket)
        if self.last_iterate is not None:
            out['last_iterate'] = self.last_iterate
        return out


class AccuracyError(NumericalError):
    """Quadrature could not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, error_bound: float):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound

    def details(self) -> Dict[str, Any]:
        return {'estimate': self.estimate, 'error_bound': self.error_bound}


class DivergenceError(NumericalError):
    """A welfare integral diverges (non-finite mean)."""


class RegularityError(NumericalError):
    """First-order condition has no sign change on the search bracket."""


class PolicyRangeError(NumericalError, ValueError):
    """Policy parameter outside the range the solver accepts."""


class EmptyMarketError(NumericalError):
    """No consumer values the good above marginal cost."""


class CapabilityError(NumericalError):
    """The demand model lacks an optional capability (e.g. f')."""


class MatchingError(NumericalError):
    """Consumer-surplus level cannot be matched by the difference policy."""

    def __init__(self, message: str, attained: Tuple[float, float]):
        super().__init__(message)
        self.attained = attained

    def details(self) -> Dict[str, Any]:
        return {'attained_range': list(self.attained)}


class InternalConsistencyError(NumericalError):
    """Welfare identity CS + PS = TS violated beyond tolerance."""


# --- data --------------------------------------------------------------------

class DataError(FairPriceError):
    """Problems with purchase data supplied by the user."""

    exit_code = EXIT_DATA


class ParseError(DataError):
    """Malformed CSV rows. `lines` holds 1-based file line numbers."""

    def __init__(self, message: str, lines: List[int]):
        super().__init__(message)
        self.lines = list(lines)

    def details(self) -> Dict[str, Any]:
        return {'lines': self.lines}


class SeparationError(DataError):
    """Outcomes are perfectly separable; the MLE does not exist."""


class SignError(DataError):
    """Fitted price coefficient is not negative; demand is not downward sloping."""
