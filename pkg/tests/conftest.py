import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from noge.cooc_graph import build_adjacency, renormalize  # noqa: E402
from noge.kg_data import RawTriple, build_truth_index, build_vocabulary, encode_dataset  # noqa: E402
from noge.synthetic import compositional_kg  # noqa: E402

ACCEPTANCE_RESULTS: list[str] = []


def raw(*rows):
    return [RawTriple(*r) for r in rows]


@pytest.fixture
def tiny_dataset():
    """4 entities, 2 relations (4 with inverses) -> 8 graph nodes."""
    splits = {
        "train": raw(("a", "r", "b"), ("b", "s", "c"), ("c", "r", "a"), ("a", "s", "d"), ("d", "r", "b")),
        "valid": raw(("a", "r", "c")),
        "test": raw(("b", "s", "d")),
    }
    return encode_dataset(splits, build_vocabulary(splits["train"]), add_inverses=True)


@pytest.fixture
def tiny_graph(tiny_dataset):
    adj = renormalize(build_adjacency(tiny_dataset.train, tiny_dataset.vocabulary))
    return tiny_dataset, adj


@pytest.fixture(scope="session")
def synthetic_dataset():
    splits = compositional_kg(seed=0)
    return encode_dataset(splits, build_vocabulary(splits["train"]), add_inverses=True)


@pytest.fixture(scope="session")
def synthetic_truth(synthetic_dataset):
    return build_truth_index(synthetic_dataset)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)
