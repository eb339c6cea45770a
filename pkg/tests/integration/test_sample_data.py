"""
Integration tests using the bundled sample data files.

These run the fit -> save -> solve/check workflows end to end on the
synthetic survey and loan files in sample_data/.
"""

import importlib.util
import io
import json
import sys
import unittest
from pathlib import Path
from unittest.mock import patch

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from fairprice.cli import main
from fairprice.demand import MixtureLogistic, TruncatedLogistic
from fairprice.ingest import CsvSchema, LoanColumns, fit_logistic, load_csv, load_model, to_demand
from fairprice.output import read_table
from fairprice.solver import solve_difference
from tests import FairPriceTestCase, SuiteConfig
from tests.fixtures.test_data import COKE

COKE_SURVEY = SuiteConfig.get_sample_path("coke_survey.csv")
LOAN_APPLICATIONS = SuiteConfig.get_sample_path("loan_applications.csv")
LOAN_SCHEMA = CsvSchema(bought='accepted', covariates=('credit_tier', 'new_customer'), loan=LoanColumns())
GENERATOR = Path(__file__).parent.parent.parent / "sample_data" / "generate.py"


def run_cli(argv):
    with patch('sys.stdout', new_callable=io.StringIO) as out, patch('sys.stderr', new_callable=io.StringIO):
        code = main(argv)
    return code, out.getvalue()


@pytest.mark.integration
@pytest.mark.requires_files
@unittest.skipUnless(COKE_SURVEY.exists() and LOAN_APPLICATIONS.exists(), "sample data not present")
class TestSampleDataIntegration(FairPriceTestCase):
    """Workflows on the real sample files."""

    def test_coke_survey_loads(self):
        records = load_csv(COKE_SURVEY)
        self.assertEqual(len(records), 400)
        self.assertTrue(all(0.0 <= r.price <= 2.5 for r in records))
        take_up = sum(r.bought for r in records) / len(records)
        self.assertGreater(take_up, 0.3)
        self.assertLess(take_up, 0.6)

    def test_coke_survey_fit_is_near_generating_model(self):
        fit = fit_logistic(load_csv(COKE_SURVEY))
        self.assertTrue(fit.converged)
        self.assertLess(abs(fit.intercept - COKE[0]), 1.5)
        self.assertLess(abs(fit.price_coef - COKE[1]), 1.2)
        model = to_demand(fit)
        self.assertIsInstance(model, TruncatedLogistic)
        self.assert_welfare_identity(solve_difference(model, 0.5))

    def test_loan_prices_are_positive(self):
        records = load_csv(LOAN_APPLICATIONS, LOAN_SCHEMA)
        self.assertEqual(len(records), 300)
        self.assertTrue(all(r.price > 0 for r in records))
        self.assertTrue(all(len(r.covariates) == 2 for r in records))

    def test_loan_fit_gives_mixture(self):
        records = load_csv(LOAN_APPLICATIONS, LOAN_SCHEMA)
        fit = fit_logistic(records, use_covariates=True)
        self.assertTrue(fit.usable)
        model = to_demand(fit, records)
        self.assertIsInstance(model, MixtureLogistic)
        self.assertLessEqual(model.n_components, 10)

    def test_fit_save_solve_command_line(self):
        model_file = self.temp_dir / "coke_fit.json"
        code, out = run_cli(['fit', '--csv', str(COKE_SURVEY), '--save-model', str(model_file)])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['n_records'], 400)
        self.assertIsInstance(load_model(model_file), TruncatedLogistic)

        code, out = run_cli(['solve', '--model-file', str(model_file), '--policy', 'diff', '--eps', '0.5'])
        self.assertEqual(code, 0)
        doc = json.loads(out)
        self.assertClose(doc['p_u'] - doc['p_l'], 0.5, 1e-12)

    def test_loan_workflow_command_line(self):
        model_file = self.temp_dir / "loans.json"
        code, out = run_cli(['fit', '--csv', str(LOAN_APPLICATIONS), '--loan-price', '--bought-col', 'accepted',
                             '--covariates', 'credit_tier,new_customer', '--save-model', str(model_file)])
        self.assertEqual(code, 0)
        doc = json.loads(out)
        self.assertEqual(doc['form'], 'mixture')
        self.assertEqual(len(doc['covariate_coefs']), 2)

        code, out = run_cli(['check', '--model-file', str(model_file)])
        self.assertEqual(code, 0)
        self.assertIn('w_monotone', json.loads(out))

    def test_preset_sweep_to_file(self):
        target = self.temp_dir / "coke_sweep.csv"
        code, _ = run_cli(['sweep', '--preset', 'coke', '--policy', 'diff', '--from', '0', '--to', '2',
                           '--steps', '21', '--out', str(target)])
        self.assertEqual(code, 0)
        frame = read_table(target)
        self.assertEqual(len(frame), 21)
        self.assertTrue(frame['error'].isna().all())
        self.assertStrictlyDecreasing(frame['cs'].to_numpy())


def load_generator():
    spec = importlib.util.spec_from_file_location("sample_data_generate", GENERATOR)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


@pytest.mark.integration
@unittest.skipUnless(GENERATOR.exists(), "sample data generator not present")
class TestSampleGenerator(FairPriceTestCase):
    """The generator writes files the loaders accept."""

    def setUp(self):
        super().setUp()
        self.generate = load_generator()

    def test_coke_survey_layout(self):
        frame = self.generate.coke_survey(n=50, seed=1)
        self.assertEqual(list(frame.columns), ['respondent', 'price', 'bought'])
        self.assertEqual(len(frame), 50)
        self.assertTrue(frame['price'].between(0.0, 2.5).all())
        self.assertTrue(frame['bought'].isin([0, 1]).all())

    def test_same_seed_same_draws(self):
        first = self.generate.loan_applications(n=20, seed=5)
        second = self.generate.loan_applications(n=20, seed=5)
        self.assertTrue(first.equals(second))

    def test_loan_file_round_trips_through_loader(self):
        frame = self.generate.loan_applications(n=40, seed=2)
        self.assertTrue(frame['term'].isin([36, 48, 60]).all())
        self.assertTrue(frame['credit_tier'].between(1, 5).all())
        self.assertTrue(frame['accepted'].isin(['yes', 'no']).all())

        target = self.temp_dir / "loans.csv"
        frame.to_csv(target, index=False, float_format='%.2f')
        records = load_csv(target, LOAN_SCHEMA)
        self.assertEqual(len(records), 40)
        self.assertTrue(all(len(r.covariates) == 2 for r in records))


if __name__ == '__main__':
    unittest.main()
