"""
Willingness-to-pay distributions.

A :class:`DemandModel` describes the valuation V of a random consumer on a
support ``[0, U]`` (``U`` may be infinite). Models expose the density f, the
survival S (aggregate demand at a price), the hazard h = f/S and the virtual
value w(v) = v - S(v)/f(v), all evaluated element-wise on floats or numpy
arrays.

Built-in families:

    uniform             Uniform on [0, a]
    exponential         rate lam
    logistic            logistic(s, mu) truncated to [0, inf)
    powerlaw            shortscale power law, S(v) = (delta / (v + delta))**alpha
    truncated_logistic  S(v) = expit(a + b v) / expit(a), b < 0
    mixture             S(v) proportional to sum_i w_i expit(c_i + beta v), beta < 0

Every family is closed under the marginal-cost shift, so ``model.shifted(c)``
returns another instance of the same family; user-defined models fall back to
:class:`ShiftedDemand`.
"""

import functools
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field, fields
from functools import cached_property
from typing import Any, ClassVar, Dict, List, Mapping, Optional, Tuple, Type, Union

import numpy as np
from scipy.special import expit, logit

from .config import DEFAULT_TAIL_MASS, GridSpec
from .errors import CapabilityError, ConfigurationError, DomainError, ParameterError
from .numerics import RootConfig, find_root_monotone

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_QUANTILE_ROOT = RootConfig(abs_tol=1e-14, rel_tol=1e-14, max_iter=400)
_MIX_CHUNK = 1 << 20
_MHR_SLOPE_TOL = 1e-6
_DIVERGENT_SLOPE = 1e-3
_MAX_REPORTED_VIOLATIONS = 25
_PLOT_SAMPLES = 101


def _elementwise(method):
    """Accept floats or arrays; return a float for scalar input."""
    @functools.wraps(method)
    def wrapper(self, v):
        out = method(self, np.asarray(v, dtype=float))
        return float(out) if np.ndim(out) == 0 else out
    return wrapper


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParameterError(message)


def _finite(value: float) -> bool:
    try:
        return math.isfinite(float(value))
    except (TypeError, ValueError):
        return False


@dataclass(frozen=True)
class Support:
    """Support ``[lower, upper]`` of a valuation distribution."""

    upper: float = math.inf
    lower: float = 0.0

    def __post_init__(self):
        if self.lower != 0.0:
            raise ParameterError(f"Support must start at 0, got {self.lower}")
        if not (self.upper > 0):
            raise ParameterError(f"Support upper bound must be positive, got {self.upper}")

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.upper)


class DemandModel(ABC):
    """
    Abstract valuation distribution.

    Subclasses implement ``_pdf`` and ``_survival`` on the support; the public
    element-wise methods take care of values outside it. Optional
    capabilities (``_pdf_derivative``, closed-form ``_tail``, closed-form
    ``_isf``) are advertised through the ``has_*`` properties.
    """

    family: ClassVar[str] = 'custom'

    @property
    @abstractmethod
    def support(self) -> Support:
        """Support of the valuation."""

    @abstractmethod
    def _pdf(self, v: np.ndarray) -> np.ndarray:
        """Density for v inside the support."""

    @abstractmethod
    def _survival(self, v: np.ndarray) -> np.ndarray:
        """Survival for v inside the support."""

    # --- optional capabilities ------------------------------------------------

    @property
    def has_pdf_derivative(self) -> bool:
        return False

    @property
    def has_closed_form_tail(self) -> bool:
        return False

    @property
    def finite_mean(self) -> bool:
        return True

    def _pdf_derivative(self, v: np.ndarray) -> np.ndarray:
        raise CapabilityError(f"{self.describe()} does not provide a density derivative")

    def _tail(self, x: np.ndarray) -> np.ndarray:
        raise CapabilityError(f"{self.describe()} has no closed-form partial expectation")

    def _hazard(self, v: np.ndarray) -> np.ndarray:
        s = self._survival(v)
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.where(s > 0, self._pdf(v) / s, np.inf)

    def _isf(self, s: np.ndarray) -> np.ndarray:
        return np.vectorize(self._isf_by_bisection, otypes=[float])(s)

    def _isf_by_bisection(self, s: float) -> float:
        upper = self.support.upper
        hi = upper if math.isfinite(upper) else 1.0
        while not math.isfinite(upper) and self.survival(hi) > s:
            hi *= 2.0
        return find_root_monotone(lambda x: self.survival(x) - s, (0.0, hi), _QUANTILE_ROOT)

    # --- public element-wise API ----------------------------------------------

    def _inside(self, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        upper = self.support.upper
        return (v >= 0.0) & (v <= upper), np.clip(v, 0.0, upper)

    @_elementwise
    def pdf(self, v: ArrayLike) -> ArrayLike:
        inside, vc = self._inside(v)
        return np.where(inside, self._pdf(vc), 0.0)

    @_elementwise
    def survival(self, v: ArrayLike) -> ArrayLike:
        _, vc = self._inside(v)
        s = np.where(v >= self.support.upper, 0.0, self._survival(vc))
        return np.where(v < 0.0, 1.0, s)

    @_elementwise
    def cdf(self, v: ArrayLike) -> ArrayLike:
        return 1.0 - self.survival(v)

    @_elementwise
    def hazard(self, v: ArrayLike) -> ArrayLike:
        _, vc = self._inside(v)
        h = np.where(v >= self.support.upper, np.inf, self._hazard(vc))
        return np.where(v < 0.0, 0.0, h)

    @_elementwise
    def virtual_value(self, v: ArrayLike) -> ArrayLike:
        """w(v) = v - 1/h(v); equals v at the top of a finite support."""
        h = self.hazard(v)
        with np.errstate(divide='ignore'):
            return np.where(h > 0, v - 1.0 / h, -np.inf)

    @_elementwise
    def pdf_derivative(self, v: ArrayLike) -> ArrayLike:
        if not self.has_pdf_derivative:
            raise CapabilityError(f"{self.describe()} does not provide a density derivative")
        inside, vc = self._inside(v)
        return np.where(inside, self._pdf_derivative(vc), 0.0)

    @_elementwise
    def tail_partial_expectation(self, x: ArrayLike) -> ArrayLike:
        """T(x) = integral of v f(v) over [x, U]."""
        if not self.has_closed_form_tail:
            raise CapabilityError(f"{self.describe()} has no closed-form partial expectation")
        _, xc = self._inside(x)
        return np.where(x >= self.support.upper, 0.0, self._tail(xc))

    @_elementwise
    def isf(self, s: ArrayLike) -> ArrayLike:
        """Inverse survival: the v with S(v) = s."""
        upper = self.support.upper
        inner = np.clip(s, np.finfo(float).tiny, 1.0)
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            x = np.clip(self._isf(inner), 0.0, upper)
        return np.where(s >= 1.0, 0.0, np.where(s <= 0.0, upper, x))

    @_elementwise
    def quantile(self, q: ArrayLike) -> ArrayLike:
        return self.isf(1.0 - q)

    # --- transforms and description -------------------------------------------

    def shifted(self, c: float) -> 'DemandModel':
        """Valuation net of cost c, conditioned on V >= c."""
        return ShiftedDemand(self, float(c))

    def parameters(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)} if _is_dataclass(self) else {}

    def describe(self) -> str:
        params = ', '.join(f"{k}={_fmt(v)}" for k, v in self.parameters().items())
        return f"{self.family}({params})"

    def to_dict(self) -> Dict[str, Any]:
        raise ConfigurationError(f"Model {self.describe()} cannot be serialised")


def _is_dataclass(obj: Any) -> bool:
    return hasattr(obj, '__dataclass_fields__')


def _fmt(value: Any) -> str:
    if isinstance(value, tuple):
        if len(value) > 4:
            return f"<{len(value)} values>"
        return '[' + ', '.join(_fmt(x) for x in value) + ']'
    if isinstance(value, float):
        return f"{value:.15g}"
    return str(value)


class _Builtin(DemandModel):
    """Serialisation shared by the parametric families."""

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {'form': self.family}
        for key, value in asdict(self).items():
            doc[key] = list(value) if isinstance(value, tuple) else value
        return doc


@dataclass(frozen=True)
class Uniform(_Builtin):
    """Uniform valuations on [0, a]. Hazard 1/(a - v)."""

    a: float = 1.0
    family: ClassVar[str] = 'uniform'

    def __post_init__(self):
        _require(_finite(self.a) and self.a > 0, f"Uniform needs a > 0, got {self.a}")

    @property
    def support(self) -> Support:
        return Support(self.a)

    @property
    def has_pdf_derivative(self) -> bool:
        return True

    @property
    def has_closed_form_tail(self) -> bool:
        return True

    def _pdf(self, v):
        return np.full_like(v, 1.0 / self.a)

    def _survival(self, v):
        return (self.a - v) / self.a

    def _hazard(self, v):
        with np.errstate(divide='ignore'):
            return np.where(v < self.a, 1.0 / (self.a - v), np.inf)

    def _pdf_derivative(self, v):
        return np.zeros_like(v)

    def _tail(self, x):
        return (self.a * self.a - x * x) / (2.0 * self.a)

    def _isf(self, s):
        return self.a * (1.0 - s)

    def shifted(self, c: float) -> 'Uniform':
        return Uniform(self.a - c)


@dataclass(frozen=True)
class Exponential(_Builtin):
    """Exponential valuations with rate ``lam``; constant hazard."""

    lam: float = 1.0
    family: ClassVar[str] = 'exponential'

    def __post_init__(self):
        _require(_finite(self.lam) and self.lam > 0, f"Exponential needs lam > 0, got {self.lam}")

    @property
    def support(self) -> Support:
        return Support(math.inf)

    @property
    def has_pdf_derivative(self) -> bool:
        return True

    @property
    def has_closed_form_tail(self) -> bool:
        return True

    def _pdf(self, v):
        return self.lam * np.exp(-self.lam * v)

    def _survival(self, v):
        return np.exp(-self.lam * v)

    def _hazard(self, v):
        return np.full_like(v, self.lam)

    def _pdf_derivative(self, v):
        return -self.lam * self.lam * np.exp(-self.lam * v)

    def _tail(self, x):
        return np.exp(-self.lam * x) * (x + 1.0 / self.lam)

    def _isf(self, s):
        return -np.log(s) / self.lam

    def shifted(self, c: float) -> 'Exponential':
        # memoryless
        return self


class _LogisticKernel(_Builtin):
    """S(v) = expit(a + b v) / expit(a) with b < 0, in index form ``(a, b)``."""

    @property
    @abstractmethod
    def index(self) -> Tuple[float, float]:
        """Intercept and slope of the logistic index."""

    @property
    def support(self) -> Support:
        return Support(math.inf)

    @property
    def has_pdf_derivative(self) -> bool:
        return True

    @property
    def has_closed_form_tail(self) -> bool:
        return True

    @cached_property
    def _s0(self) -> float:
        return float(expit(self.index[0]))

    def _z(self, v):
        a, b = self.index
        return a + b * v

    def _survival(self, v):
        return expit(self._z(v)) / self._s0

    def _pdf(self, v):
        z = self._z(v)
        return -self.index[1] * expit(z) * expit(-z) / self._s0

    def _hazard(self, v):
        return -self.index[1] * expit(-self._z(v))

    def _pdf_derivative(self, v):
        z = self._z(v)
        sig, rest = expit(z), expit(-z)
        b = self.index[1]
        return -b * b * sig * rest * (rest - sig) / self._s0

    def _tail(self, x):
        b = self.index[1]
        return x * self._survival(x) + np.logaddexp(0.0, self._z(x)) / (-b * self._s0)

    def _isf(self, s):
        a, b = self.index
        return (logit(s * self._s0) - a) / b


@dataclass(frozen=True)
class Logistic(_LogisticKernel):
    """Logistic(s, mu) valuations truncated to [0, inf); hazard expit((v - mu)/s)/s."""

    s: float = 1.0
    mu: float = 0.0
    family: ClassVar[str] = 'logistic'

    def __post_init__(self):
        _require(_finite(self.s) and self.s > 0, f"Logistic needs s > 0, got {self.s}")
        _require(_finite(self.mu), f"Logistic needs a finite mu, got {self.mu}")

    @property
    def index(self) -> Tuple[float, float]:
        return self.mu / self.s, -1.0 / self.s

    def shifted(self, c: float) -> 'Logistic':
        return Logistic(self.s, self.mu - c)


@dataclass(frozen=True)
class TruncatedLogistic(_LogisticKernel):
    """Fitted logistic demand S(p) = expit(a + b p) / expit(a)."""

    a: float
    b: float
    family: ClassVar[str] = 'truncated_logistic'

    def __post_init__(self):
        _require(_finite(self.a), f"TruncatedLogistic needs a finite intercept, got {self.a}")
        _require(_finite(self.b) and self.b < 0,
                 f"TruncatedLogistic needs a negative price coefficient, got b={self.b}")

    @property
    def index(self) -> Tuple[float, float]:
        return self.a, self.b

    def shifted(self, c: float) -> 'TruncatedLogistic':
        return TruncatedLogistic(self.a + self.b * c, self.b)


@dataclass(frozen=True)
class PowerLawShortscale(_Builtin):
    """Shortscale power law: S(v) = (delta/(v + delta))**alpha, hazard alpha/(v + delta).

    The mean is finite only for alpha > 1.
    """

    delta: float = 1.0
    alpha: float = 2.0
    family: ClassVar[str] = 'powerlaw'

    def __post_init__(self):
        _require(_finite(self.delta) and self.delta > 0, f"PowerLaw needs delta > 0, got {self.delta}")
        _require(_finite(self.alpha) and self.alpha > 0, f"PowerLaw needs alpha > 0, got {self.alpha}")

    @property
    def support(self) -> Support:
        return Support(math.inf)

    @property
    def has_pdf_derivative(self) -> bool:
        return True

    @property
    def has_closed_form_tail(self) -> bool:
        return True

    @property
    def finite_mean(self) -> bool:
        return self.alpha > 1.0

    def _survival(self, v):
        return (self.delta / (v + self.delta)) ** self.alpha

    def _hazard(self, v):
        return self.alpha / (v + self.delta)

    def _pdf(self, v):
        return self._hazard(v) * self._survival(v)

    def _pdf_derivative(self, v):
        return -(self.alpha + 1.0) / (v + self.delta) * self._pdf(v)

    def _tail(self, x):
        if not self.finite_mean:
            return np.full_like(x, np.inf)
        return self._survival(x) * (x + (x + self.delta) / (self.alpha - 1.0))

    def _isf(self, s):
        return self.delta * (s ** (-1.0 / self.alpha) - 1.0)

    def shifted(self, c: float) -> 'PowerLawShortscale':
        return PowerLawShortscale(self.delta + c, self.alpha)


@dataclass(frozen=True)
class MixtureLogistic(_Builtin):
    """
    Covariate-averaged logistic demand.

    S(v) = sum_i w_i expit(c_i + beta v) / sum_i w_i expit(c_i), the empirical
    average of per-consumer logistic take-up curves. ``weights`` default to
    equal weights and usually hold multiplicities of deduplicated intercepts.
    """

    intercepts: Tuple[float, ...]
    beta: float
    weights: Optional[Tuple[float, ...]] = None
    family: ClassVar[str] = 'mixture'

    def __post_init__(self):
        object.__setattr__(self, 'intercepts', tuple(float(c) for c in self.intercepts))
        if self.weights is not None:
            object.__setattr__(self, 'weights', tuple(float(w) for w in self.weights))
        _require(len(self.intercepts) > 0, 'MixtureLogistic needs at least one intercept')
        _require(all(math.isfinite(c) for c in self.intercepts), 'MixtureLogistic intercepts must be finite')
        _require(_finite(self.beta) and self.beta < 0,
                 f"MixtureLogistic needs a negative price coefficient, got beta={self.beta}")
        if self.weights is not None:
            _require(len(self.weights) == len(self.intercepts),
                     'MixtureLogistic weights must match the intercepts')
            _require(all(w > 0 and math.isfinite(w) for w in self.weights),
                     'MixtureLogistic weights must be positive')

    @property
    def support(self) -> Support:
        return Support(math.inf)

    @property
    def has_pdf_derivative(self) -> bool:
        return True

    @property
    def has_closed_form_tail(self) -> bool:
        return True

    @cached_property
    def _components(self) -> Tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.intercepts, dtype=float)
        w = np.ones_like(c) if self.weights is None else np.asarray(self.weights, dtype=float)
        return c, w / w.sum()

    @cached_property
    def _s0(self) -> float:
        return float(self._mix(expit, np.zeros(())))

    def _mix(self, kernel, v: np.ndarray) -> np.ndarray:
        c, w = self._components
        flat = np.asarray(v, dtype=float).reshape(-1)
        out = np.empty_like(flat)
        step = max(1, _MIX_CHUNK // c.size)
        for start in range(0, flat.size, step):
            z = c[:, None] + self.beta * flat[None, start:start + step]
            out[start:start + step] = w @ kernel(z)
        return out.reshape(np.shape(v))

    def _survival(self, v):
        return self._mix(expit, v) / self._s0

    def _pdf(self, v):
        return -self.beta * self._mix(lambda z: expit(z) * expit(-z), v) / self._s0

    def _pdf_derivative(self, v):
        def kernel(z):
            sig, rest = expit(z), expit(-z)
            return sig * rest * (rest - sig)
        return -self.beta * self.beta * self._mix(kernel, v) / self._s0

    def _tail(self, x):
        softplus = self._mix(lambda z: np.logaddexp(0.0, z), x)
        return x * self._survival(x) + softplus / (-self.beta * self._s0)

    def _isf_by_bisection(self, s: float) -> float:
        # every component survival bounds the mixture from above by its largest intercept
        hi = max(1.0, (logit(min(s * self._s0, 0.5)) - max(self.intercepts)) / self.beta)
        while self.survival(hi) > s:
            hi *= 2.0
        return find_root_monotone(lambda x: self.survival(x) - s, (0.0, hi), _QUANTILE_ROOT)

    def shifted(self, c: float) -> 'MixtureLogistic':
        return MixtureLogistic(tuple(ci + self.beta * c for ci in self.intercepts), self.beta, self.weights)

    @property
    def n_components(self) -> int:
        return len(self.intercepts)


@dataclass(frozen=True)
class ShiftedDemand(DemandModel):
    """Conditional distribution of V - cost given V >= cost, for any base model."""

    base: DemandModel
    cost: float
    family: ClassVar[str] = 'shifted'

    def __post_init__(self):
        _require(_finite(self.cost) and self.cost >= 0, f"Shift must be a non-negative cost, got {self.cost}")
        _require(self.base.survival(self.cost) > 0, f"No demand above cost {self.cost}")

    @cached_property
    def _sc(self) -> float:
        return float(self.base.survival(self.cost))

    @property
    def support(self) -> Support:
        return Support(self.base.support.upper - self.cost)

    @property
    def has_pdf_derivative(self) -> bool:
        return self.base.has_pdf_derivative

    @property
    def has_closed_form_tail(self) -> bool:
        return self.base.has_closed_form_tail

    @property
    def finite_mean(self) -> bool:
        return self.base.finite_mean

    def _pdf(self, v):
        return self.base.pdf(v + self.cost) / self._sc

    def _survival(self, v):
        return self.base.survival(v + self.cost) / self._sc

    def _hazard(self, v):
        return self.base.hazard(v + self.cost)

    def _pdf_derivative(self, v):
        return self.base.pdf_derivative(v + self.cost) / self._sc

    def _tail(self, x):
        y = x + self.cost
        return (self.base.tail_partial_expectation(y) - self.cost * self.base.survival(y)) / self._sc

    def _isf(self, s):
        return self.base.isf(s * self._sc) - self.cost

    def shifted(self, c: float) -> 'ShiftedDemand':
        return ShiftedDemand(self.base, self.cost + c)

    def describe(self) -> str:
        return f"{self.base.describe()} net of cost {_fmt(self.cost)}"

    def to_dict(self) -> Dict[str, Any]:
        return {'form': self.family, 'base': self.base.to_dict(), 'cost': self.cost}


FAMILIES: Dict[str, Type[DemandModel]] = {
    'uniform': Uniform,
    'exponential': Exponential,
    'logistic': Logistic,
    'powerlaw': PowerLawShortscale,
    'truncated_logistic': TruncatedLogistic,
    'mixture': MixtureLogistic,
}


@dataclass(frozen=True)
class BuiltinFamily:
    """Family name plus parameters, e.g. ``BuiltinFamily('powerlaw', {'delta': 1, 'alpha': 2})``."""

    name: str
    params: Mapping[str, Any] = field(default_factory=dict)


def make_builtin(family: Union[str, BuiltinFamily], **params: Any) -> DemandModel:
    """
    Build one of the parametric families.

    Args:
        family: Family name (see ``FAMILIES``) or a :class:`BuiltinFamily`.
        **params: Family parameters; merged over ``BuiltinFamily.params``.

    Raises:
        ParameterError: Unknown family or invalid parameters.
    """
    if isinstance(family, BuiltinFamily):
        name, params = family.name, {**dict(family.params), **params}
    else:
        name = family
    cls = FAMILIES.get(str(name).lower())
    if cls is None:
        raise ParameterError(f"Unknown distribution family '{name}' (expected one of {', '.join(FAMILIES)})")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ParameterError(f"Invalid parameters for {name}: {exc}")


def model_from_dict(doc: Mapping[str, Any]) -> DemandModel:
    """Inverse of ``DemandModel.to_dict``."""
    if 'form' not in doc:
        raise ConfigurationError("Model document lacks a 'form' field")
    params = {k: v for k, v in doc.items() if k != 'form'}
    if doc['form'] == ShiftedDemand.family:
        return ShiftedDemand(model_from_dict(params['base']), float(params['cost']))
    if doc['form'] == MixtureLogistic.family:
        weights = params.get('weights')
        return MixtureLogistic(tuple(params.get('intercepts', ())), params.get('beta', 0.0),
                               None if weights is None else tuple(weights))
    return make_builtin(doc['form'], **params)


def virtual_value(model: DemandModel, v: float) -> float:
    """
    Checked virtual value w(v) = v - S(v)/f(v).

    Raises:
        DomainError: v outside [0, U) or f(v) = 0.
    """
    v = float(v)
    if not (0.0 <= v < model.support.upper):
        raise DomainError(f"v={v} lies outside the support [0, {model.support.upper})")
    density = model.pdf(v)
    if not density > 0:
        raise DomainError(f"Density vanishes at v={v}")
    return v - model.survival(v) / density


def effective_upper(model: DemandModel, tail_mass: float = DEFAULT_TAIL_MASS) -> float:
    """
    Finite truncation point U_eff with S(U_eff) <= tail_mass.

    Returns the support's upper bound when it is finite.
    """
    if not 0.0 < tail_mass < 1.0:
        raise ParameterError(f"tail_mass must lie in (0, 1), got {tail_mass}")
    upper = model.support.upper
    if math.isfinite(upper):
        return float(upper)

    u = float(model.isf(tail_mass))
    step = max(abs(u) * 1e-12, 1e-300)
    while model.survival(u) > tail_mass:
        u += step
        step *= 2.0
    return u


@dataclass
class RegularityReport:
    """Grid certificate of MHR and k-strong regularity.

    Attributes:
        is_mhr: Hazard non-decreasing on the grid within the slope tolerance.
        mhr_violations: ``(v, h(v), h(v + dv))`` at offending grid steps (first few).
        k: Regularity level that was tested.
        k_strong_regular_up_to: Largest certified k; ``None`` when w is not monotone.
        w_monotone: Virtual value strictly increasing on the grid.
        is_k_strongly_regular: ``w_monotone`` and the limit of w exceeds ``k``.
        grid: Description of the evaluation grid.
        samples: Down-sampled ``(v, h(v), w(v))`` triples for hazard plots.
    """

    is_mhr: bool
    mhr_violations: List[Tuple[float, float, float]]
    k: float
    k_strong_regular_up_to: Optional[float]
    w_monotone: bool
    is_k_strongly_regular: bool
    grid: Dict[str, Any]
    samples: List[Tuple[float, float, float]] = field(default_factory=list)

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def check_regularity(model: DemandModel, k: float = 0.0,
                     grid: Optional[GridSpec] = None) -> RegularityReport:
    """
    Certify MHR and k-strong regularity on a grid over ``[0, U_eff)``.

    The right end of a finite support is excluded because the hazard is
    infinite there.

    Raises:
        ConfigurationError: Grid with fewer than 16 points.
    """
    grid = grid or GridSpec(n_points=2001)
    grid.require(16, 'Regularity diagnostics')
    tail_mass = grid.tail_mass or DEFAULT_TAIL_MASS
    support_upper = model.support.upper
    upper = grid.upper if grid.upper is not None else effective_upper(model, tail_mass)
    upper = min(upper, support_upper)

    v = np.linspace(0.0, upper, int(grid.n_points), endpoint=False)
    h = np.asarray(model.hazard(v), dtype=float)
    w = np.asarray(model.virtual_value(v), dtype=float)

    slopes = np.diff(h) / np.diff(v)
    floor = -_MHR_SLOPE_TOL * np.maximum(1.0, h[:-1])
    bad = np.flatnonzero(~(slopes >= floor))
    violations = [(float(v[i]), float(h[i]), float(h[i + 1])) for i in bad[:_MAX_REPORTED_VIOLATIONS]]

    w_monotone = bool(np.all(np.diff(w) > 0))
    k_up_to = _limit_of_virtual_value(v, w, support_upper) if w_monotone else None
    strongly_regular = bool(w_monotone and k_up_to is not None and k_up_to > k)

    picks = np.unique(np.linspace(0, v.size - 1, min(v.size, _PLOT_SAMPLES)).astype(int))
    report = RegularityReport(
        is_mhr=bad.size == 0,
        mhr_violations=violations,
        k=float(k),
        k_strong_regular_up_to=k_up_to,
        w_monotone=w_monotone,
        is_k_strongly_regular=strongly_regular,
        grid={'n_points': int(grid.n_points), 'lower': 0.0, 'upper': float(upper),
              'tail_mass': tail_mass, 'includes_upper': False},
        samples=[(float(v[i]), float(h[i]), float(w[i])) for i in picks],
    )
    logger.debug(f"Regularity of {model.describe()}: mhr={report.is_mhr}, "
                 f"w_monotone={w_monotone}, k_up_to={k_up_to}")
    return report


def _limit_of_virtual_value(v: np.ndarray, w: np.ndarray, support_upper: float) -> float:
    if math.isinf(support_upper):
        start = int(0.9 * (v.size - 1))
        slope = (w[-1] - w[start]) / (v[-1] - v[start])
        return math.inf if slope > _DIVERGENT_SLOPE else float(w[-1])
    # extrapolate the last grid step to the top of the support
    slope = (w[-1] - w[-2]) / (v[-1] - v[-2])
    return float(w[-1] + slope * (support_upper - v[-1]))
