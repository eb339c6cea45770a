"""
Test configuration and setup for the fairprice test suite.

This module provides common test utilities and the base test case used by
the unit and integration suites.
"""

import logging
import math
import shutil
import tempfile
import unittest
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

import numpy as np

# Configure test logging
logging.basicConfig(level=logging.WARNING)  # Reduce noise during tests

PROJECT_ROOT = Path(__file__).parent.parent
SAMPLE_DATA_DIR = PROJECT_ROOT / "sample_data"


class SuiteConfig:
    """Test directories and temporary workspace handling."""

    def __init__(self):
        self.test_dir = Path(__file__).parent
        self.fixtures_dir = self.test_dir / "fixtures"
        self.temp_dir = None

    def setup_temp_dir(self) -> Path:
        """Create a temporary directory for test files."""
        self.temp_dir = Path(tempfile.mkdtemp(prefix="fairprice_test_"))
        return self.temp_dir

    def cleanup_temp_dir(self):
        """Clean up temporary directory."""
        if self.temp_dir and self.temp_dir.exists():
            shutil.rmtree(self.temp_dir)
            self.temp_dir = None

    @staticmethod
    def get_sample_path(filename: str) -> Path:
        """Path of a bundled sample data file."""
        return SAMPLE_DATA_DIR / filename


class FileManager:
    """Manage test files and cleanup."""

    def __init__(self, temp_dir: Path):
        self.temp_dir = temp_dir
        self.created_files: List[Path] = []

    def create_file(self, filename: str, content: Iterable[str]) -> Path:
        """Create a test file with one line per item."""
        file_path = self.temp_dir / filename
        with open(file_path, 'w', encoding='utf-8') as f:
            for line in content:
                f.write(line + '\n')
        self.created_files.append(file_path)
        return file_path

    def create_csv(self, filename: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        """Create a CSV file from a header and rows of values."""
        lines = [','.join(header)]
        lines.extend(','.join(str(v) for v in row) for row in rows)
        return self.create_file(filename, lines)

    def path(self, filename: str) -> Path:
        return self.temp_dir / filename

    def cleanup(self):
        """Clean up all created files."""
        for file_path in self.created_files:
            if file_path.exists():
                file_path.unlink()


class FairPriceTestCase(unittest.TestCase):
    """Base test case class for fairprice tests."""

    def setUp(self):
        """Set up test environment."""
        self.test_config = SuiteConfig()
        self.temp_dir = self.test_config.setup_temp_dir()
        self.file_manager = FileManager(self.temp_dir)

    def tearDown(self):
        """Clean up test environment."""
        self.file_manager.cleanup()
        self.test_config.cleanup_temp_dir()

    def assert_file_exists(self, file_path: Path, msg: str = None):
        """Assert that a file exists."""
        self.assertTrue(Path(file_path).exists(), msg or f"File {file_path} does not exist")

    def assert_file_contains(self, file_path: Path, content: str, msg: str = None):
        """Assert that a file contains specific content."""
        self.assert_file_exists(file_path)
        with open(file_path, 'r', encoding='utf-8') as f:
            file_content = f.read()
            self.assertIn(content, file_content, msg or f"File {file_path} does not contain '{content}'")

    def assertClose(self, actual: float, expected: float, tol: float = 1e-8, rel: bool = False,
                    msg: Optional[str] = None):
        """Absolute (or relative when ``rel``) closeness of two floats."""
        scale = max(1.0, abs(expected)) if rel else 1.0
        self.assertTrue(math.isfinite(actual), msg or f"{actual} is not finite")
        self.assertLessEqual(abs(actual - expected), tol * scale,
                             msg or f"{actual!r} differs from {expected!r} by more than {tol:g}")

    def assertStrictlyIncreasing(self, values: Sequence[float], margin: float = 1e-12, msg: str = None):
        diffs = np.diff(np.asarray(values, dtype=float))
        worst = int(np.argmin(diffs))
        self.assertGreater(diffs[worst], margin,
                           msg or f"Not strictly increasing at index {worst}: step {diffs[worst]!r}")

    def assertStrictlyDecreasing(self, values: Sequence[float], margin: float = 1e-12, msg: str = None):
        self.assertStrictlyIncreasing(-np.asarray(values, dtype=float), margin, msg)

    def assert_welfare_identity(self, solution, rel: float = 1e-8):
        """CS + PS = TS for a solved band."""
        self.assertClose(solution.cs + solution.ps, solution.ts, rel, rel=True,
                         msg=f"CS + PS != TS for {solution.as_dict()}")
