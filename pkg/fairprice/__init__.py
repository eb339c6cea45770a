"""
fairprice: revenue-optimal personalized pricing under fairness caps.

A seller facing valuations V ~ F with marginal cost c may price-discriminate
subject to a price-difference cap (p_u - p_l <= eps) or a price-ratio cap
((p_u - c) <= gamma (p_l - c)). The optimal strategy is a price band; this
package solves for it, evaluates producer/consumer/total surplus, checks the
regularity conditions the theory relies on and fits logistic demand to
purchase data.
"""

__version__ = '1.0.0'

from .config import GridSpec, Tolerances, get_tolerances
from .demand import (DemandModel, Exponential, Logistic, MixtureLogistic, PowerLawShortscale, RegularityReport,
                     ShiftedDemand, Support, TruncatedLogistic, Uniform, check_regularity, effective_upper,
                     make_builtin, model_from_dict, virtual_value)
from .errors import (ConfigurationError, DataError, FairPriceError, NumericalError, ParameterError,
                     PolicyRangeError, RegularityError)
from .ingest import (CsvSchema, LogisticFit, PurchaseRecord, fit_logistic, load_csv, load_model, load_preset,
                     loan_price, save_model, to_demand)
from .oracle import brute_force_solve
from .solver import (Difference, DominanceRecord, Ratio, Sensitivity, Solution, SweepTable, cost_shift,
                     dominance_compare, epsilon_threshold, max_epsilon, max_gamma, sensitivity, solve,
                     solve_difference, solve_ratio, solve_uniform_price, sweep)
from .welfare import (PriceBand, WelfareReport, consumer_surplus, efficient_trade_surplus, producer_surplus,
                      report, total_surplus, tradeoff_bounds)

__all__ = [
    '__version__',
    'GridSpec', 'Tolerances', 'get_tolerances',
    'DemandModel', 'Exponential', 'Logistic', 'MixtureLogistic', 'PowerLawShortscale', 'RegularityReport',
    'ShiftedDemand', 'Support', 'TruncatedLogistic', 'Uniform', 'check_regularity', 'effective_upper',
    'make_builtin', 'model_from_dict', 'virtual_value',
    'ConfigurationError', 'DataError', 'FairPriceError', 'NumericalError', 'ParameterError',
    'PolicyRangeError', 'RegularityError',
    'CsvSchema', 'LogisticFit', 'PurchaseRecord', 'fit_logistic', 'load_csv', 'load_model', 'load_preset',
    'loan_price', 'save_model', 'to_demand',
    'brute_force_solve',
    'Difference', 'DominanceRecord', 'Ratio', 'Sensitivity', 'Solution', 'SweepTable', 'cost_shift',
    'dominance_compare', 'epsilon_threshold', 'max_epsilon', 'max_gamma', 'sensitivity', 'solve',
    'solve_difference', 'solve_ratio', 'solve_uniform_price', 'sweep',
    'PriceBand', 'WelfareReport', 'consumer_surplus', 'efficient_trade_surplus', 'producer_surplus',
    'report', 'total_surplus', 'tradeoff_bounds',
]
