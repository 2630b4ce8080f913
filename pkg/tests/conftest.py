from __future__ import annotations

from pathlib import Path

import pytest

from mundartlex.phoneset import default_extended, default_reduced, default_rules

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def extended():
    return default_extended()


@pytest.fixture(scope="session")
def reduced():
    return default_reduced()


@pytest.fixture(scope="session")
def rules(reduced):
    return default_rules(reduced)


@pytest.fixture(scope="session")
def sample_dict_path() -> Path:
    return DATA_DIR / "sample_dict.tsv"
