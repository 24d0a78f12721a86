import numpy as np
import pytest

from itemrank import Dataset, Itemset, fixtures


@pytest.fixture(scope="session")
def d1():
    return fixtures.d1()


@pytest.fixture(scope="session")
def d2():
    return fixtures.d2()


@pytest.fixture(scope="session")
def d3():
    return fixtures.d3()


@pytest.fixture(scope="session")
def d4():
    return fixtures.d4()


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def random_dataset(rng, k=None, m=None, max_k=5, max_m=16) -> Dataset:
    """Small random dataset; margins drawn uniformly so zeros are common."""
    k = k if k is not None else int(rng.integers(2, max_k + 1))
    m = m if m is not None else int(rng.integers(2, max_m + 1))
    thetas = rng.random(k)
    matrix = (rng.random((m, k)) < thetas).astype(np.uint8)
    return Dataset.from_matrix(matrix)


def all_nonempty_itemsets(k: int):
    full = Itemset(bits=(1 << k) - 1)
    return sorted(full.subsets(nonempty=True))
