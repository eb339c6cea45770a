"""
fairprice command line interface.

Verbs: solve, sweep, check, threshold, dominance, fit. Results go to stdout or
``--out`` as JSON or CSV; failures print a JSON error document on stderr and
exit with the error category's code (2 configuration, 3 numeric, 4 data).
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .config import GridSpec, Tolerances, configure_logging, get_tolerances
from .demand import DemandModel, check_regularity, make_builtin
from .errors import ConfigurationError, EXIT_NUMERICAL, FairPriceError
from .ingest import (DEFAULT_LOAN_RATE, PRESETS, CsvSchema, LoanColumns, fit_logistic, load_csv, load_model,
                     load_preset, save_model, to_demand)
from .output import OUTPUT_FORMATS, ReportWriter, jsonable
from .solver import (POLICY_KINDS, cost_shift, dominance_compare, epsilon_threshold, make_policy, solve, sweep)

logger = logging.getLogger(__name__)

COMMANDS = ('solve', 'sweep', 'check', 'threshold', 'dominance', 'fit')

# CLI family name -> parameters accepted for it
DIST_PARAMS: Dict[str, Tuple[str, ...]] = {
    'uniform': ('a',),
    'exponential': ('lam',),
    'logistic': ('s', 'mu'),
    'powerlaw': ('delta', 'alpha'),
}
_PARAM_FLAGS = {'a': '--a', 'lam': '--lambda', 's': '--s', 'mu': '--mu', 'delta': '--delta', 'alpha': '--alpha'}

_DEFAULT_FORMAT = {'sweep': 'csv', 'dominance': 'csv'}

SOLUTION_COLUMNS = ('policy', 'param', 'cost', 'p_l', 'p_u', 'ps', 'cs', 'ts', 'foc_residual', 'binding', 'regular')
SWEEP_COLUMNS = ('param', 'p_l', 'p_u', 'cs', 'ps', 'ts', 'error')
DOMINANCE_COLUMNS = ('gamma', 'eps_matched', 'cs_level', 'ps_diff', 'ps_ratio', 'ts_diff', 'ts_ratio',
                     'ps_gain', 'ts_gain')
FIT_COLUMNS = ('intercept', 'price_coef', 'log_likelihood', 'converged', 'iterations', 'n_records', 'usable')
SAMPLE_COLUMNS = ('v', 'hazard', 'virtual_value')


@dataclass
class RunConfig:
    """Validated settings of one CLI invocation."""

    command: str
    dist: Optional[str] = None
    dist_params: Dict[str, float] = field(default_factory=dict)
    preset: Optional[str] = None
    model_file: Optional[str] = None
    cost: float = 0.0
    policy: str = 'diff'
    params: List[float] = field(default_factory=list)
    grid_from: Optional[float] = None
    grid_to: Optional[float] = None
    steps: Optional[int] = None
    log_grid: bool = False
    output_format: Optional[str] = None
    out: Optional[str] = None
    tail_mass: Optional[float] = None
    grid_points: Optional[int] = None
    k: float = 0.0
    workers: int = 1
    debug: bool = False
    # fit
    csv_path: Optional[str] = None
    price_col: str = 'price'
    bought_col: str = 'bought'
    covariates: Tuple[str, ...] = ()
    loan_price: bool = False
    payment_col: str = 'monthly_payment'
    term_col: str = 'term'
    amount_col: str = 'loan_amount'
    rate: float = DEFAULT_LOAN_RATE
    save_model: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"Unknown command '{self.command}'")
        if self.output_format is None:
            self.output_format = _DEFAULT_FORMAT.get(self.command, 'json')
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigurationError(f"Unknown output format '{self.output_format}'")
        if self.workers < 1:
            raise ConfigurationError(f"--workers must be >= 1, got {self.workers}")
        if self.command == 'fit':
            if not self.csv_path:
                raise ConfigurationError('fit needs --csv')
            return

        sources = [s for s in (self.dist, self.preset, self.model_file) if s]
        if len(sources) != 1:
            raise ConfigurationError('Give exactly one model source: --dist, --preset or --model-file')
        if self.dist is not None:
            if self.dist not in DIST_PARAMS:
                raise ConfigurationError(f"Unknown distribution '{self.dist}'")
            stray = [_PARAM_FLAGS[name] for name in self.dist_params if name not in DIST_PARAMS[self.dist]]
            if stray:
                raise ConfigurationError(f"{', '.join(stray)} does not apply to --dist {self.dist}")
        elif self.dist_params:
            raise ConfigurationError('Family parameters need --dist')
        if not (math.isfinite(self.cost) and self.cost >= 0):
            raise ConfigurationError(f"--cost must be finite and >= 0, got {self.cost}")
        if self.policy not in POLICY_KINDS:
            raise ConfigurationError(f"Unknown policy '{self.policy}'")
        self._check_grid()

    def _check_grid(self) -> None:
        spec = (self.grid_from, self.grid_to, self.steps)
        if all(v is None for v in spec):
            if self.log_grid:
                raise ConfigurationError('--log needs --from/--to/--steps')
            return
        if any(v is None for v in spec):
            raise ConfigurationError('A parameter grid needs all of --from, --to and --steps')
        if self.params:
            raise ConfigurationError('Give either explicit --eps/--gamma values or a --from/--to/--steps grid')
        if self.steps < 1:
            raise ConfigurationError(f"--steps must be >= 1, got {self.steps}")
        if self.steps > 1 and not self.grid_to > self.grid_from:
            raise ConfigurationError('--to must exceed --from')
        if self.log_grid and not self.grid_from > 0:
            raise ConfigurationError('A log-spaced grid needs --from > 0')

    def parameter_values(self) -> List[float]:
        if self.params:
            return list(self.params)
        if self.steps is None:
            return []
        if self.steps == 1:
            return [float(self.grid_from)]
        spacing = np.geomspace if self.log_grid else np.linspace
        return [float(x) for x in spacing(self.grid_from, self.grid_to, self.steps)]

    def tolerances(self) -> Tolerances:
        tol = get_tolerances()
        if self.tail_mass is not None:
            tol = replace(tol, tail_mass=self.tail_mass)
        return tol

    def grid(self) -> GridSpec:
        return GridSpec(n_points=self.grid_points or 2001, tail_mass=self.tail_mass)

    def build_model(self) -> DemandModel:
        if self.preset:
            return load_preset(self.preset)
        if self.model_file:
            return load_model(self.model_file)
        return make_builtin(self.dist, **self.dist_params)

    def schema(self) -> CsvSchema:
        loan = LoanColumns(self.payment_col, self.term_col, self.amount_col, self.rate) if self.loan_price else None
        return CsvSchema(price=self.price_col, bought=self.bought_col, covariates=tuple(self.covariates), loan=loan)

    def writer(self) -> ReportWriter:
        return ReportWriter(self.out, self.output_format)


def _float_list(text: str) -> List[float]:
    try:
        return [float(chunk) for chunk in text.split(',') if chunk.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'")


def _name_list(text: str) -> List[str]:
    return [chunk.strip() for chunk in text.split(',') if chunk.strip()]


def _flatten(groups: Optional[List[List[Any]]]) -> List[Any]:
    return [item for group in groups or [] for item in group]


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors become ConfigurationError (exit 2, JSON on stderr)."""

    def error(self, message: str):
        raise ConfigurationError(f"{self.prog}: {message}")


def _build_parser() -> argparse.ArgumentParser:
    output = ArgumentParser(add_help=False)
    output.add_argument('-o', '--out', help='Write the result to this file instead of stdout')
    output.add_argument('--format', choices=OUTPUT_FORMATS, dest='output_format',
                        help='Output format (default: csv for sweep/dominance, json otherwise)')
    output.add_argument('-dbg', '--debug', action='store_true', help='Enable debug output')

    model = ArgumentParser(add_help=False)
    source = model.add_argument_group('model')
    source.add_argument('--dist', choices=sorted(DIST_PARAMS), help='Built-in valuation distribution')
    source.add_argument('--a', type=float, help='Uniform upper bound')
    source.add_argument('--lambda', type=float, dest='lam', help='Exponential rate')
    source.add_argument('--s', type=float, help='Logistic scale')
    source.add_argument('--mu', type=float, help='Logistic location')
    source.add_argument('--delta', type=float, help='Power law scale')
    source.add_argument('--alpha', type=float, help='Power law exponent')
    source.add_argument('--preset', choices=sorted(PRESETS), help='Published fitted demand model')
    source.add_argument('--model-file', help='Model file written by "fit --save-model"')
    model.add_argument('-c', '--cost', type=float, default=0.0, help='Marginal cost (default: %(default)s)')
    model.add_argument('--tail-mass', type=float, help='Survival mass at which infinite supports are cut')
    model.add_argument('--grid-points', type=int, help='Diagnostic grid size (default: 2001)')

    policy = ArgumentParser(add_help=False)
    policy.add_argument('--policy', choices=sorted(POLICY_KINDS), help='Cap type (inferred from --eps/--gamma)')
    policy.add_argument('--eps', type=_float_list, action='append', help='Difference cap(s), comma separated')
    policy.add_argument('--gamma', type=_float_list, action='append', help='Ratio cap(s), comma separated')
    policy.add_argument('--from', type=float, dest='grid_from', help='First parameter of a grid')
    policy.add_argument('--to', type=float, dest='grid_to', help='Last parameter of a grid')
    policy.add_argument('--steps', type=int, help='Number of grid points')
    policy.add_argument('--log', action='store_true', dest='log_grid', help='Log-spaced grid')
    policy.add_argument('-w', '--workers', type=int, default=1, help='Threads for sweeps (default: %(default)s)')

    parser = ArgumentParser(
        prog='fairprice',
        description='Optimal personalized pricing under price-difference and price-ratio caps',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s solve --dist uniform --a 1 --policy diff --eps 0.5
  %(prog)s sweep --dist exponential --lambda 1 --policy diff --from 0 --to 3 --steps 61
  %(prog)s sweep --dist powerlaw --delta 1 --alpha 2 --policy ratio --from 1 --to 32 --steps 11 --log
  %(prog)s check --preset cake
  %(prog)s dominance --preset coke --gamma 1.25,1.5,2,4
  %(prog)s fit --csv survey.csv --save-model coke.json
        """
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest='command', metavar='COMMAND')
    sub.required = True

    sub.add_parser('solve', parents=[model, policy, output], help='Optimal band for one or more caps')
    sub.add_parser('sweep', parents=[model, policy, output], help='Trade-off table over a parameter grid')
    check = sub.add_parser('check', parents=[model, output], help='MHR / strong regularity diagnostics')
    check.add_argument('--k', type=float, default=0.0, help='Regularity level to certify (default: %(default)s)')
    sub.add_parser('threshold', parents=[model, output], help='Difference-cap threshold eps0')
    sub.add_parser('dominance', parents=[model, policy, output],
                   help='Difference vs ratio cap at equal consumer surplus')

    fit = sub.add_parser('fit', parents=[output], help='Fit logistic demand to purchase data')
    fit.add_argument('--csv', required=True, dest='csv_path', help='Purchase records (headed CSV)')
    fit.add_argument('--price-col', default='price', help='Price column (default: %(default)s)')
    fit.add_argument('--bought-col', default='bought', help='Outcome column (default: %(default)s)')
    fit.add_argument('--covariates', type=_name_list, action='append',
                     help='Covariate columns, comma separated; fits the mixture demand')
    fit.add_argument('--loan-price', action='store_true', help='Derive the price from loan columns')
    fit.add_argument('--payment-col', default='monthly_payment', help='Monthly payment column')
    fit.add_argument('--term-col', default='term', help='Loan term column')
    fit.add_argument('--amount-col', default='loan_amount', help='Loan amount column')
    fit.add_argument('--rate', type=float, default=DEFAULT_LOAN_RATE,
                     help='Per-period discount rate (default: %(default)s)')
    fit.add_argument('--save-model', help='Write the fitted demand model as JSON')
    return parser


def _resolve_policy(command: str, args: argparse.Namespace) -> Tuple[str, List[float]]:
    eps = _flatten(getattr(args, 'eps', None))
    gamma = _flatten(getattr(args, 'gamma', None))
    if eps and gamma:
        raise ConfigurationError('Give --eps or --gamma, not both')
    chosen = getattr(args, 'policy', None)
    if command == 'dominance':
        if eps or chosen == 'diff':
            raise ConfigurationError('dominance compares against ratio caps; give --gamma values')
        return 'ratio', gamma
    if chosen is None:
        chosen = 'ratio' if gamma else 'diff'
    if (chosen == 'diff' and gamma) or (chosen == 'ratio' and eps):
        raise ConfigurationError(f"--policy {chosen} does not take {'--gamma' if gamma else '--eps'}")
    return chosen, eps or gamma


def parse_arguments(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    Parse command line arguments and return configuration.

    Raises:
        SystemExit: --help and --version (code 0).
        ConfigurationError: Usage errors and inconsistent combinations of valid flags.
    """
    args = _build_parser().parse_args(argv)
    policy, params = _resolve_policy(args.command, args)
    dist_params = {name: getattr(args, name) for name in _PARAM_FLAGS if getattr(args, name, None) is not None}

    return RunConfig(
        command=args.command,
        dist=getattr(args, 'dist', None),
        dist_params=dist_params,
        preset=getattr(args, 'preset', None),
        model_file=getattr(args, 'model_file', None),
        cost=getattr(args, 'cost', 0.0),
        policy=policy,
        params=params,
        grid_from=getattr(args, 'grid_from', None),
        grid_to=getattr(args, 'grid_to', None),
        steps=getattr(args, 'steps', None),
        log_grid=getattr(args, 'log_grid', False),
        output_format=args.output_format,
        out=args.out,
        tail_mass=getattr(args, 'tail_mass', None),
        grid_points=getattr(args, 'grid_points', None),
        k=getattr(args, 'k', 0.0),
        workers=getattr(args, 'workers', 1),
        debug=args.debug,
        csv_path=getattr(args, 'csv_path', None),
        price_col=getattr(args, 'price_col', 'price'),
        bought_col=getattr(args, 'bought_col', 'bought'),
        covariates=tuple(_flatten(getattr(args, 'covariates', None))),
        loan_price=getattr(args, 'loan_price', False),
        payment_col=getattr(args, 'payment_col', 'monthly_payment'),
        term_col=getattr(args, 'term_col', 'term'),
        amount_col=getattr(args, 'amount_col', 'loan_amount'),
        rate=getattr(args, 'rate', DEFAULT_LOAN_RATE),
        save_model=getattr(args, 'save_model', None),
    )


# --- commands --------------------------------------------------------------------

def cmd_solve(config: RunConfig) -> int:
    values = config.parameter_values()
    if not values:
        raise ConfigurationError('solve needs --eps or --gamma (or a --from/--to/--steps grid)')
    model, tol = config.build_model(), config.tolerances()
    rows = []
    for value in values:
        solution = solve(model, make_policy(config.policy, value), config.cost, tol)
        rows.append(solution.as_dict())
        logger.info(f"{config.policy}={value:g}: band=({solution.band.p_l:.6g}, {solution.band.p_u:.6g}), "
                    f"ps={solution.ps:.6g}, cs={solution.cs:.6g}")

    described = model.describe()
    document: Any = {'model': described, **rows[0]} if len(rows) == 1 else {'model': described, 'solutions': rows}
    config.writer().write_table(rows, SOLUTION_COLUMNS,
                                header={'model': described, 'cost': config.cost,
                                        'tolerances': tol.describe()},
                                document=document)
    return 0


def cmd_sweep(config: RunConfig) -> int:
    model, tol = config.build_model(), config.tolerances()
    table = sweep(model, config.policy, config.parameter_values(), config.cost, tol,
                  max_workers=config.workers)
    header = {'model': table.model, 'cost': table.cost, 'policy': table.policy_kind,
              'tolerances': table.tolerances, 'efficient_trade': table.efficient_trade,
              'uniform_ps': table.uniform_ps, 'uniform_cs': table.uniform_cs}
    config.writer().write_table(table.records(), SWEEP_COLUMNS, header=header)
    if table.succeeded == 0:
        _report_error({'error': 'SweepFailed', 'message': f"All {len(table.rows)} sweep rows failed",
                       'exit_code': EXIT_NUMERICAL})
        return EXIT_NUMERICAL
    return 0


def cmd_check(config: RunConfig) -> int:
    model = config.build_model()
    described = model.describe()
    # with a cost, certify the shifted valuation V - c | V >= c
    certified = cost_shift(model, config.cost, config.tolerances())
    report = check_regularity(certified, config.k, config.grid())
    rows = [dict(zip(SAMPLE_COLUMNS, sample)) for sample in report.samples]
    header = {'model': described, 'cost': config.cost, 'is_mhr': report.is_mhr, 'w_monotone': report.w_monotone,
              'k': report.k, 'k_strong_regular_up_to': report.k_strong_regular_up_to}
    document = {'model': described, 'cost': config.cost, 'certified_model': certified.describe(),
                **report.as_dict()}
    config.writer().write_table(rows, SAMPLE_COLUMNS, header=header, document=document)
    logger.info(f"{described} at cost {config.cost:g}: MHR={report.is_mhr}, "
                f"virtual value monotone={report.w_monotone}")
    return 0


def cmd_threshold(config: RunConfig) -> int:
    model, tol = config.build_model(), config.tolerances()
    eps0 = epsilon_threshold(model, config.cost, tol)
    row = {'model': model.describe(), 'cost': config.cost, 'eps0': eps0}
    config.writer().write_table([row], ('model', 'cost', 'eps0'), document=row)
    return 0


def cmd_dominance(config: RunConfig) -> int:
    gammas = config.parameter_values()
    if not gammas:
        raise ConfigurationError('dominance needs --gamma values (or a --from/--to/--steps grid)')
    model, tol = config.build_model(), config.tolerances()
    rows = [dominance_compare(model, gamma, config.cost, tol).as_dict() for gamma in gammas]
    header = {'model': model.describe(), 'cost': config.cost, 'tolerances': tol.describe()}
    config.writer().write_table(rows, DOMINANCE_COLUMNS, header=header)
    return 0


def cmd_fit(config: RunConfig) -> int:
    records = load_csv(config.csv_path, config.schema())
    fit = fit_logistic(records, use_covariates=bool(config.covariates))
    model = to_demand(fit, records)
    if config.save_model:
        save_model(model, config.save_model)

    document = {**fit.as_dict(), 'model': model.describe(), 'form': model.family,
                'model_file': config.save_model}
    config.writer().write_table([fit.as_dict()], FIT_COLUMNS, header={'model': model.describe()},
                                document=document)
    return 0


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig], int]] = {
    'solve': cmd_solve,
    'sweep': cmd_sweep,
    'check': cmd_check,
    'threshold': cmd_threshold,
    'dominance': cmd_dominance,
    'fit': cmd_fit,
}


def _report_error(payload: Dict[str, Any]) -> None:
    sys.stderr.write(json.dumps(jsonable(payload)) + '\n')
    sys.stderr.flush()


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main application entry point; returns the process exit code."""
    config: Optional[RunConfig] = None
    try:
        config = parse_arguments(argv)
        configure_logging(config.debug)
        logger.debug(f"fairprice {__version__}: {config}")
        return COMMAND_HANDLERS[config.command](config)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 2)
    except KeyboardInterrupt:
        logger.info('Operation cancelled by user')
        return 1
    except FairPriceError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        if config is not None and config.debug:
            logger.debug('Traceback', exc_info=True)
        _report_error(exc.to_dict())
        return exc.exit_code
    except Exception as exc:
        logger.error(f"Unexpected error: {exc}")
        if config is not None and config.debug:
            raise
        return 1


if __name__ == '__main__':
    sys.exit(main())
