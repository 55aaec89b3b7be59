from pathlib import Path

import pytest

from revsignal.corpus import load_corpus
from revsignal.timeline import build_index

FIXTURES = Path(__file__).parent / "fixtures"
MC1 = FIXTURES / "mc1"


@pytest.fixture(scope="session")
def mc1_paths():
    return (MC1 / "reviews.ndjson", MC1 / "org.ndjson", MC1 / "modules.ndjson")


@pytest.fixture(scope="session")
def mc1(mc1_paths):
    return load_corpus(*mc1_paths)


@pytest.fixture(scope="session")
def mc1_index(mc1):
    return build_index(mc1)
