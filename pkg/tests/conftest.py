import sys
from pathlib import Path

import pytest

# Tests import sibling helper modules (oracles.py) directly.
sys.path.insert(0, str(Path(__file__).parent))

CORPUS_DIR = Path(__file__).parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS_DIR
