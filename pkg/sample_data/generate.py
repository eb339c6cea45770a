#!/usr/bin/env python3
"""
Regenerates the synthetic purchase data sets in this directory.

  coke_survey.csv        take-up ~ expit(3.94 - 3.44 price), price ~ U[0, 2.5]
  loan_applications.csv  take-up ~ expit(1.5 + 0.6 credit_tier - 0.8 new_customer - 0.0015 price)
                         where price = NPV of the payments at 0.12% per month minus the amount
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import expit

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from fairprice.config import configure_logging  # noqa: E402
from fairprice.ingest import DEFAULT_LOAN_RATE, loan_price  # noqa: E402
from tests.fixtures.test_data import COKE, synthetic_purchases  # noqa: E402

logger = logging.getLogger(__name__)

COKE_SEED = 20240611
LOAN_SEED = 20240612
LOAN_INDEX = (1.5, 0.6, -0.8, -0.0015)
LOAN_TERMS = (36, 48, 60)


def coke_survey(n: int = 400, seed: int = COKE_SEED) -> pd.DataFrame:
    """Survey responses at prices drawn uniformly on [0, 2.5]."""
    records = synthetic_purchases(*COKE, n=n, seed=seed, price_range=(0.0, 2.5))
    return pd.DataFrame({
        'respondent': np.arange(1, n + 1),
        'price': [round(r.price, 2) for r in records],
        'bought': [int(r.bought) for r in records],
    })


def loan_applications(n: int = 300, seed: int = LOAN_SEED) -> pd.DataFrame:
    """Loan offers with annuity payments at a random monthly rate and a yes/no acceptance."""
    rng = np.random.default_rng(seed)
    amounts = 5000 + 1000 * rng.integers(0, 31, size=n)
    terms = rng.choice(LOAN_TERMS, size=n)
    rates = rng.uniform(0.002, 0.008, size=n)
    payments = np.round(amounts * rates / (1.0 - (1.0 + rates) ** -terms.astype(float)), 2)
    prices = np.array([loan_price(pay, int(term), amount, DEFAULT_LOAN_RATE)
                       for pay, term, amount in zip(payments, terms, amounts)])
    tiers = rng.integers(1, 6, size=n)
    new_customer = (rng.uniform(size=n) < 0.4).astype(int)

    intercept, tier_coef, new_coef, price_coef = LOAN_INDEX
    take_up = expit(intercept + tier_coef * tiers + new_coef * new_customer + price_coef * prices)
    accepted = rng.uniform(size=n) < take_up
    return pd.DataFrame({
        'application': np.arange(1, n + 1),
        'loan_amount': amounts,
        'term': terms,
        'monthly_payment': payments,
        'credit_tier': tiers,
        'new_customer': new_customer,
        'accepted': np.where(accepted, 'yes', 'no'),
    })


def parse_arguments():
    parser = argparse.ArgumentParser(
        description='Regenerate the synthetic purchase CSVs used by the sample workflows.',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python sample_data/generate.py
  python sample_data/generate.py --out-dir /tmp/data --coke-rows 2000
        """)
    parser.add_argument('--out-dir', type=Path, default=Path(__file__).resolve().parent,
                        help='Directory for the CSV files (default: this directory)')
    parser.add_argument('--coke-rows', type=int, default=400, help='Survey responses (default: 400)')
    parser.add_argument('--loan-rows', type=int, default=300, help='Loan applications (default: 300)')
    parser.add_argument('--debug', action='store_true', help='Enable debug logging')
    return parser.parse_args()


def main():
    args = parse_arguments()
    configure_logging(args.debug)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    for name, frame in (('coke_survey.csv', coke_survey(args.coke_rows)),
                        ('loan_applications.csv', loan_applications(args.loan_rows))):
        target = args.out_dir / name
        frame.to_csv(target, index=False, float_format='%.2f')
        logger.info(f"Wrote {len(frame)} rows to {target}")


if __name__ == '__main__':
    main()
