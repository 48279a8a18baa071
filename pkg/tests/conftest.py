import pytest

from airtran.data import dataset_from_pairs
from airtran.prng import bulk_gaussian


@pytest.fixture
def tiny_dataset():
    """Three queries, k=3, relevant first in each group."""
    pairs = [
        (0, 0, 1), (0, 10, 0), (0, 11, 0),
        (1, 1, 1), (1, 12, 0), (1, 13, 0),
        (2, 2, 1), (2, 14, 0), (2, 10, 0),
    ]
    return dataset_from_pairs(pairs)


@pytest.fixture
def tiny_embeddings(tiny_dataset):
    """Deterministic gaussian embeddings sized for tiny_dataset."""
    dim = 8
    q = bulk_gaussian(101, 3 * dim).reshape(3, dim)
    d = bulk_gaussian(202, 15 * dim).reshape(15, dim)
    return q, d
