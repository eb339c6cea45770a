import os
import shutil
import tempfile
from pathlib import Path

import pytest

from fairprice.config import TOLERANCE_ENV_VAR, _tolerances_for
from fairprice.demand import Exponential, PowerLawShortscale, Uniform
from fairprice.ingest import load_preset


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    temp_path = tempfile.mkdtemp()
    yield Path(temp_path)
    shutil.rmtree(temp_path)


@pytest.fixture
def temp_file(temp_dir):
    """Create a temporary file in the temp directory."""
    def _create_temp_file(filename="test_file.txt", content=""):
        file_path = temp_dir / filename
        file_path.write_text(content)
        return file_path
    return _create_temp_file


@pytest.fixture
def uniform_model():
    return Uniform(1.0)


@pytest.fixture
def exponential_model():
    return Exponential(1.0)


@pytest.fixture
def powerlaw_model():
    return PowerLawShortscale(1.0, 2.0)


@pytest.fixture
def coke_model():
    return load_preset("coke")


@pytest.fixture
def sample_purchase_csv(temp_file):
    """Small headed purchase file with both outcomes at several prices."""
    return temp_file("purchases.csv", "price,bought\n0.5,1\n1.0,1\n1.0,0\n1.5,1\n2.0,0\n2.5,0\n0.2,1\n1.8,0\n")


@pytest.fixture(autouse=True)
def reset_environment():
    """Reset environment variables and cached tolerances before and after each test."""
    original_env = os.environ.copy()
    os.environ.pop(TOLERANCE_ENV_VAR, None)
    _tolerances_for.cache_clear()
    yield
    os.environ.clear()
    os.environ.update(original_env)
    _tolerances_for.cache_clear()

