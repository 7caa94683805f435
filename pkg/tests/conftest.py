import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import defect_ready_corpus, random_corpus  # noqa: E402


@pytest.fixture
def rng():
    return random.Random(20240315)


@pytest.fixture
def corpus(rng):
    return random_corpus(rng, n_voices=30)


@pytest.fixture
def rich_corpus(rng):
    return defect_ready_corpus(rng)
