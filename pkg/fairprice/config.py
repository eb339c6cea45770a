"""
Shared configuration: tolerance bundles, grid descriptions and logging setup.

Default tolerances can be overridden through the ``FAIRPRICE_TOL`` environment
variable, a comma separated list of ``key=value`` pairs, for example::

    FAIRPRICE_TOL="root_abs=1e-13,quad_rel=1e-10"

Recognised keys: root_abs, root_rel, root_iter, quad_abs, quad_rel,
quad_depth, welfare_rel, tail_mass.
"""

import logging
import os
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, Optional

from .errors import ConfigurationError
from .numerics import QuadConfig, RootConfig

TOLERANCE_ENV_VAR = 'FAIRPRICE_TOL'

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
LOG_DATE_FORMAT = '%Y-%m-%d %H:%M:%S'

DEFAULT_TAIL_MASS = 1e-12


@dataclass(frozen=True)
class Tolerances:
    """Tolerance bundle threaded through the solver stack.

    Attributes:
        root: Root finder settings used for every first-order condition.
        quad: Quadrature settings for welfare integrals without closed forms.
        welfare_rel: Relative tolerance of the CS + PS = TS identity check.
        compare: Slack used when comparing welfare values across policies.
        tail_mass: Survival mass beyond which infinite supports are truncated.
    """

    root: RootConfig = field(default_factory=lambda: RootConfig(abs_tol=1e-13, rel_tol=1e-13))
    quad: QuadConfig = field(default_factory=QuadConfig)
    welfare_rel: float = 1e-7
    compare: float = 1e-8
    tail_mass: float = DEFAULT_TAIL_MASS

    def __post_init__(self):
        if not self.welfare_rel > 0 or not self.compare > 0:
            raise ConfigurationError('Welfare tolerances must be positive')
        if not 0.0 < self.tail_mass < 1.0:
            raise ConfigurationError(f"tail_mass must lie in (0, 1), got {self.tail_mass}")

    def describe(self) -> str:
        return (f"root_abs={self.root.abs_tol:g};root_rel={self.root.rel_tol:g};"
                f"quad_abs={self.quad.abs_tol:g};quad_rel={self.quad.rel_tol:g};"
                f"tail_mass={self.tail_mass:g}")

    def with_overrides(self, overrides: Dict[str, str]) -> 'Tolerances':
        """Return a copy with ``FAIRPRICE_TOL`` style overrides applied."""
        root_kwargs, quad_kwargs, own_kwargs = {}, {}, {}
        for key, raw in overrides.items():
            target = _OVERRIDE_KEYS.get(key)
            if target is None:
                raise ConfigurationError(
                    f"Unknown tolerance key '{key}' (expected one of {', '.join(sorted(_OVERRIDE_KEYS))})")
            bucket, name, cast = target
            try:
                value = cast(raw)
            except ValueError:
                raise ConfigurationError(f"Invalid value for tolerance '{key}': {raw!r}")
            {'root': root_kwargs, 'quad': quad_kwargs, 'self': own_kwargs}[bucket][name] = value

        return replace(self,
                       root=replace(self.root, **root_kwargs),
                       quad=replace(self.quad, **quad_kwargs),
                       **own_kwargs)


_OVERRIDE_KEYS = {
    'root_abs': ('root', 'abs_tol', float),
    'root_rel': ('root', 'rel_tol', float),
    'root_iter': ('root', 'max_iter', int),
    'quad_abs': ('quad', 'abs_tol', float),
    'quad_rel': ('quad', 'rel_tol', float),
    'quad_depth': ('quad', 'max_depth', int),
    'welfare_rel': ('self', 'welfare_rel', float),
    'tail_mass': ('self', 'tail_mass', float),
}


def parse_overrides(text: str) -> Dict[str, str]:
    """Split ``key=value,key=value`` into a dict."""
    overrides: Dict[str, str] = {}
    for chunk in text.split(','):
        chunk = chunk.strip()
        if not chunk:
            continue
        key, sep, value = chunk.partition('=')
        if not sep or not value.strip():
            raise ConfigurationError(f"Malformed tolerance override '{chunk}' (expected key=value)")
        overrides[key.strip()] = value.strip()
    return overrides


@lru_cache(maxsize=8)
def _tolerances_for(env_value: str) -> Tolerances:
    return Tolerances().with_overrides(parse_overrides(env_value))


def get_tolerances(tol: Optional[Tolerances] = None) -> Tolerances:
    """Resolve the tolerance bundle: explicit argument, else environment, else defaults."""
    if tol is not None:
        return tol
    return _tolerances_for(os.environ.get(TOLERANCE_ENV_VAR, ''))


@dataclass(frozen=True)
class GridSpec:
    """Evaluation grid for diagnostics and the brute-force oracle.

    Attributes:
        n_points: Number of grid points.
        upper: Right end of the grid; ``None`` means derive it from the model.
        tail_mass: Survival mass used to derive ``upper`` when it is ``None``.
    """

    n_points: int = 4001
    upper: Optional[float] = None
    tail_mass: Optional[float] = None

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ConfigurationError(f"n_points must be an integer >= 2, got {self.n_points}")
        if self.upper is not None and not self.upper > 0:
            raise ConfigurationError(f"Grid upper bound must be positive, got {self.upper}")
        if self.tail_mass is not None and not 0.0 < self.tail_mass < 1.0:
            raise ConfigurationError(f"Grid tail_mass must lie in (0, 1), got {self.tail_mass}")

    def require(self, minimum: int, purpose: str) -> None:
        if self.n_points < minimum:
            raise ConfigurationError(
                f"{purpose} needs at least {minimum} grid points, got {self.n_points}")


def configure_logging(debug: bool = False) -> None:
    """Install the package log format and set the root level."""
    logging.basicConfig(format=LOG_FORMAT, datefmt=LOG_DATE_FORMAT)
    logging.getLogger().setLevel(logging.DEBUG if debug else logging.INFO)
