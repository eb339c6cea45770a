"""
Purchase data ingestion and logistic demand fitting.

Records are (price, bought, covariates) rows read from CSV with pandas. The
take-up probability is modelled as expit(a + coef . x + b p) and fitted by
Newton / iteratively reweighted least squares. A fit becomes a demand model
through :func:`to_demand`:

    no covariates  ->  TruncatedLogistic(a, b)
    covariates     ->  MixtureLogistic over the empirical covariate rows
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import expit

from .demand import DemandModel, MixtureLogistic, TruncatedLogistic, model_from_dict
from .errors import (ConfigurationError, ConvergenceError, DataError, ParameterError, ParseError,
                     SeparationError, SignError)
from .output import atomic_write

logger = logging.getLogger(__name__)

DEFAULT_LOAN_RATE = 0.0012

# published fitted parameters (a, b) of S(p) proportional to expit(a + b p)
PRESETS: Dict[str, Tuple[float, float]] = {
    'coke': (3.94, -3.44),
    'cake': (4.58, -3.72),
}

_TRUE_VALUES = {'1', 'true', 't', 'yes', 'y'}
_FALSE_VALUES = {'0', 'false', 'f', 'no', 'n'}
_SEPARATION_RESIDUAL = 1e-6


@dataclass(frozen=True)
class PurchaseRecord:
    """One surveyed consumer: offered price, take-up, optional covariates."""

    price: float
    bought: bool
    covariates: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class LoanColumns:
    """Columns from which the loan price is derived by :func:`loan_price`."""

    payment: str = 'monthly_payment'
    term: str = 'term'
    amount: str = 'loan_amount'
    rate: float = DEFAULT_LOAN_RATE


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for :func:`load_csv`.

    Attributes:
        price: Price column (ignored when ``loan`` is set).
        bought: Binary outcome column.
        covariates: Covariate columns, in model order.
        loan: Derive the price from loan columns instead of reading it.
    """

    price: str = 'price'
    bought: str = 'bought'
    covariates: Tuple[str, ...] = ()
    loan: Optional[LoanColumns] = None

    def required_columns(self) -> List[str]:
        cols = [self.bought, *self.covariates]
        if self.loan is None:
            cols.insert(0, self.price)
        else:
            cols[:0] = [self.loan.payment, self.loan.term, self.loan.amount]
        return cols


@dataclass(frozen=True)
class FitConfig:
    """IRLS settings. ``grad_tol`` applies to the per-record gradient norm."""

    grad_tol: float = 1e-8
    max_iter: int = 100
    ridge: float = 1e-10
    separation_bound: float = 1e6

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.ridge >= 0 and self.max_iter >= 1 and self.separation_bound > 0):
            raise ConfigurationError(f"Invalid fit configuration: {self}")


@dataclass
class LogisticFit:
    """Maximum-likelihood logistic take-up model.

    Attributes:
        intercept: a.
        price_coef: b (beta in the covariate model); negative for usable demand.
        covariate_coefs: Coefficients of the covariates, if any.
        log_likelihood: Log-likelihood at the estimate.
        converged: Gradient norm fell below tolerance.
        iterations: Newton steps taken.
        n_records: Records used.
        history: Log-likelihood after each iteration.
    """

    intercept: float
    price_coef: float
    covariate_coefs: Optional[Tuple[float, ...]]
    log_likelihood: float
    converged: bool
    iterations: int
    n_records: int = 0
    history: List[float] = field(default_factory=list)

    @property
    def usable(self) -> bool:
        return self.price_coef < 0

    @property
    def has_covariates(self) -> bool:
        return self.covariate_coefs is not None

    def as_dict(self) -> Dict[str, Any]:
        doc = asdict(self)
        doc.pop('history')
        doc['covariate_coefs'] = None if self.covariate_coefs is None else list(self.covariate_coefs)
        doc['usable'] = self.usable
        return doc


def loan_price(monthly_payment: float, term: int, loan_amount: float,
               rate: float = DEFAULT_LOAN_RATE) -> float:
    """
    Net present value of a loan's payments minus the amount lent.

    Args:
        monthly_payment: Payment per period.
        term: Number of periods, at least 1.
        loan_amount: Principal.
        rate: Per-period discount rate, > -1.

    Raises:
        ParameterError: term < 1 or rate <= -1.
    """
    if int(term) != term or term < 1:
        raise ParameterError(f"Loan term must be a positive integer, got {term}")
    if not rate > -1:
        raise ParameterError(f"Discount rate must exceed -1, got {rate}")
    discounts = (1.0 + rate) ** -np.arange(1, int(term) + 1, dtype=float)
    return float(monthly_payment * discounts.sum() - loan_amount)


def _parse_bought(series: pd.Series) -> pd.Series:
    lowered = series.str.strip().str.lower()
    parsed = pd.Series(np.nan, index=series.index, dtype=float)
    parsed[lowered.isin(_TRUE_VALUES)] = 1.0
    parsed[lowered.isin(_FALSE_VALUES)] = 0.0
    return parsed


def load_csv(path: Union[str, Path], schema: CsvSchema = CsvSchema()) -> List[PurchaseRecord]:
    """
    Read purchase records from a headed CSV file.

    Raises:
        ConfigurationError: Missing file or mapped columns.
        ParseError: Rows with missing or unparsable fields (1-based line numbers).
        DataError: No data rows.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"CSV file not found: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path} is empty")
    except pd.errors.ParserError as exc:
        raise ParseError(f"{path} is not valid CSV: {exc}", lines=[])

    missing = [col for col in schema.required_columns() if col not in frame.columns]
    if missing:
        raise ConfigurationError(f"{path} lacks column(s): {', '.join(missing)}")
    if frame.empty:
        raise DataError(f"{path} contains a header but no records")

    numeric = {col: pd.to_numeric(frame[col].str.strip(), errors='coerce')
               for col in schema.required_columns() if col != schema.bought}
    bought = _parse_bought(frame[schema.bought])

    if schema.loan is None:
        price = numeric[schema.price]
    else:
        loan = schema.loan
        terms = numeric[loan.term]
        price = pd.Series(np.nan, index=frame.index, dtype=float)
        valid_term = terms.notna() & (terms >= 1) & (terms == terms.round())
        for idx in frame.index[valid_term]:
            price[idx] = loan_price(numeric[loan.payment][idx], int(terms[idx]),
                                    numeric[loan.amount][idx], loan.rate)

    bad = price.isna() | (price < 0) | bought.isna()
    for col in schema.covariates:
        bad |= numeric[col].isna()
    if bad.any():
        # line 1 is the header
        lines = [int(i) + 2 for i in frame.index[bad]]
        shown = ', '.join(str(n) for n in lines[:20])
        raise ParseError(f"{path}: {len(lines)} malformed row(s) at line(s) {shown}", lines=lines)

    covariates = (np.column_stack([numeric[col].to_numpy(dtype=float) for col in schema.covariates])
                  if schema.covariates else None)
    records = [
        PurchaseRecord(price=float(price[i]), bought=bool(bought[i]),
                       covariates=None if covariates is None else tuple(covariates[k]))
        for k, i in enumerate(frame.index)
    ]
    logger.info(f"Loaded {len(records)} purchase records from {path}")
    return records


def _design(records: Sequence[PurchaseRecord], use_covariates: bool) -> Tuple[np.ndarray, np.ndarray]:
    prices = np.array([r.price for r in records], dtype=float)
    columns = [np.ones_like(prices), prices]
    if use_covariates:
        dims = {len(r.covariates) if r.covariates is not None else -1 for r in records}
        if len(dims) != 1 or -1 in dims:
            raise DataError('Covariate fit needs every record to carry covariates of one dimension')
        columns.append(np.array([r.covariates for r in records], dtype=float).reshape(len(records), -1))
    X = np.column_stack(columns)
    y = np.array([1.0 if r.bought else 0.0 for r in records])
    return X, y


def _log_likelihood(X: np.ndarray, y: np.ndarray, coef: np.ndarray) -> float:
    eta = X @ coef
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


class LogisticFitter:
    """Newton / IRLS maximum-likelihood fit with step halving and a ridge floor."""

    def __init__(self, config: FitConfig = FitConfig()):
        self.config = config
        self.history: List[float] = []

    def fit(self, records: Sequence[PurchaseRecord], use_covariates: bool = False) -> LogisticFit:
        """
        Fit the take-up model.

        Raises:
            DataError: Fewer than two records or a single outcome class.
            SeparationError: Outcomes perfectly separated by the regressors.
            ConvergenceError: Iteration budget exhausted.
        """
        if len(records) < 2:
            raise DataError(f"Need at least 2 records to fit, got {len(records)}")
        X, y = _design(records, use_covariates)
        if y.min() == y.max():
            raise DataError('Both outcomes (bought and not bought) must be present')

        cfg = self.config
        n, k = X.shape
        coef = np.zeros(k)
        ll = _log_likelihood(X, y, coef)
        self.history = [ll]

        for iteration in range(cfg.max_iter + 1):
            mu = expit(X @ coef)
            residual = y - mu
            grad = X.T @ residual
            # a vanishing gradient with vanishing residuals means the coefficients diverge
            separated = (np.max(np.abs(residual)) < _SEPARATION_RESIDUAL
                         or np.linalg.norm(coef) > cfg.separation_bound)
            if np.linalg.norm(grad) / n < cfg.grad_tol and not separated:
                return self._result(coef, ll, True, iteration, n, use_covariates)
            if separated:
                raise SeparationError(
                    f"Outcomes are perfectly separated (|coef|={np.linalg.norm(coef):.3g}); no finite MLE")
            if iteration == cfg.max_iter:
                break

            weights = mu * (1.0 - mu)
            hessian = (X * weights[:, None]).T @ X + cfg.ridge * np.eye(k)
            try:
                step = np.linalg.solve(hessian, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hessian, grad, rcond=None)[0]

            # halve until the likelihood does not decrease
            scale = 1.0
            for _ in range(40):
                candidate = coef + scale * step
                new_ll = _log_likelihood(X, y, candidate)
                if new_ll >= ll:
                    break
                scale *= 0.5
            else:
                candidate, new_ll = coef, ll
            coef, ll = candidate, new_ll
            self.history.append(ll)
            logger.debug(f"IRLS iteration {iteration + 1}: loglik={ll:.10g}, |grad|/n={np.linalg.norm(grad) / n:.3e}")

        raise ConvergenceError(f"Logistic fit did not converge in {cfg.max_iter} iterations",
                               last_iterate=coef.tolist())

    def _result(self, coef: np.ndarray, ll: float, converged: bool, iterations: int, n: int,
                use_covariates: bool) -> LogisticFit:
        fit = LogisticFit(
            intercept=float(coef[0]),
            price_coef=float(coef[1]),
            covariate_coefs=tuple(float(x) for x in coef[2:]) if use_covariates else None,
            log_likelihood=ll,
            converged=converged,
            iterations=iterations,
            n_records=n,
            history=list(self.history),
        )
        logger.info(f"Logistic fit: a={fit.intercept:.6g}, b={fit.price_coef:.6g}, "
                    f"loglik={ll:.6g} after {iterations} iterations")
        return fit


def fit_logistic(records: Sequence[PurchaseRecord], use_covariates: bool = False,
                 cfg: FitConfig = FitConfig()) -> LogisticFit:
    return LogisticFitter(cfg).fit(records, use_covariates)


def to_demand(fit: LogisticFit, records: Optional[Sequence[PurchaseRecord]] = None) -> DemandModel:
    """
    Turn a fit into a valuation distribution normalised so that S(0) = 1.

    Covariate fits average the per-record take-up curves; identical
    intercepts are merged with multiplicity weights.

    Raises:
        SignError: Price coefficient not negative.
        DataError: Covariate fit without records.
    """
    if not fit.usable:
        raise SignError(f"Price coefficient {fit.price_coef:.6g} is not negative; demand is not downward sloping")
    if not fit.has_covariates:
        return TruncatedLogistic(fit.intercept, fit.price_coef)
    if not records:
        raise DataError('A covariate fit needs its records to build the mixture demand')

    X = np.array([r.covariates for r in records], dtype=float).reshape(len(records), -1)
    intercepts = fit.intercept + X @ np.asarray(fit.covariate_coefs, dtype=float)
    unique, counts = np.unique(intercepts, return_counts=True)
    logger.info(f"Mixture demand with {unique.size} distinct components from {len(records)} records")
    return MixtureLogistic(tuple(unique.tolist()), fit.price_coef, tuple(float(c) for c in counts))


def load_preset(name: str) -> TruncatedLogistic:
    """Published Coke or cake demand model."""
    try:
        a, b = PRESETS[name.lower()]
    except KeyError:
        raise ConfigurationError(f"Unknown preset '{name}' (expected one of {', '.join(PRESETS)})")
    return TruncatedLogistic(a, b)


def save_model(model: DemandModel, path: Union[str, Path]) -> Path:
    """Write the model document as JSON, atomically."""
    path = atomic_write(path, json.dumps(model.to_dict(), indent=2) + '\n')
    logger.info(f"Model written: {path}")
    return path


def load_model(path: Union[str, Path]) -> DemandModel:
    """Read a model document written by :func:`save_model`."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError:
        raise ConfigurationError(f"Model file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"Model file {path} is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigurationError(f"Model file {path} must hold a JSON object")
    return model_from_dict(doc)
