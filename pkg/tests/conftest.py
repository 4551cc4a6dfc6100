"""Shared fixtures: the digit corpus and small ready-made splits.

Set RESPROP_MNIST_DIR to a directory holding the four standard-named
IDX files to run the data-dependent tests against the real corpus;
otherwise a deterministic synthetic corpus is generated once per
session.
"""

import os
from pathlib import Path

import numpy as np
import pytest

from resprop.data import find_standard_files, load_splits_from_dir
from resprop.synthetic import write_corpus

TRAIN_SIZE = 7000
TEST_SIZE = 1500


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory) -> Path:
    env = os.environ.get("RESPROP_MNIST_DIR")
    if env:
        find_standard_files(env)
        return Path(env)
    target = tmp_path_factory.mktemp("corpus")
    write_corpus(target, n_train=TRAIN_SIZE, n_test=TEST_SIZE, seed=901)
    return target


@pytest.fixture(scope="session")
def desk_splits(data_dir):
    """The acceptance-scale split: 5000 train, 1000 validation."""
    return load_splits_from_dir(data_dir, 5000, 1000, 1000)


@pytest.fixture(scope="session")
def tiny_splits(data_dir):
    """A fast split for loop-level tests."""
    return load_splits_from_dir(data_dir, 400, 120, 150)
