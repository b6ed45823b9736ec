import os
from pathlib import Path

import numpy as np
import pytest

from dataset import Dataset, xor_dataset
from utils import DATA_DIR_ENV


@pytest.fixture
def xor():
    return xor_dataset()


@pytest.fixture
def and_dataset():
    return Dataset(
        features=np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]),
        labels=np.array([0, 0, 0, 1]),
        attribute_names=("a", "b"),
        name="and",
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20090101)


@pytest.fixture
def two_blobs(rng):
    """Separable two-class data: 40 rows, 5 positive attributes"""
    zeros = rng.uniform(1.0, 2.0, size=(20, 5))
    ones = rng.uniform(4.0, 5.0, size=(20, 5))
    return Dataset(
        features=np.vstack([zeros, ones]),
        labels=np.array([0] * 20 + [1] * 20),
        attribute_names=tuple(f"f{i}" for i in range(5)),
        name="blobs",
    )


@pytest.fixture
def write_file(tmp_path):
    """Write text to a file under tmp_path and return its path"""
    def write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return write


@pytest.fixture
def uci_dir():
    value = os.environ.get(DATA_DIR_ENV)
    if not value or not Path(value).is_dir():
        pytest.skip(f"set {DATA_DIR_ENV} to a directory with the UCI files to run this test")
    return Path(value)
