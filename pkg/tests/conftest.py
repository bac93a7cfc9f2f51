import numpy as np
import pytest

from src.datagen import GaussFamily, GaussSpec, generate
from src.tabular_domain import ColumnDomain, Schema, Table


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="module")
def corr_table() -> Table:
    return generate(GaussSpec(GaussFamily.CORR, n=2000, d=4, seed=3))


@pytest.fixture
def discrete_table() -> Table:
    schema = Schema((ColumnDomain.categorical("a", 3), ColumnDomain.categorical("b", 2),
                     ColumnDomain.categorical("c", 4)))
    gen = np.random.default_rng(7)
    a = gen.integers(0, 3, 600)
    b = (a == 0).astype(int)
    c = gen.integers(0, 4, 600)
    return Table(schema, np.column_stack([a, b, c]))


@pytest.fixture
def mixed_table() -> Table:
    schema = Schema((ColumnDomain.continuous("x", -1.0, 1.0, bins=4),
                     ColumnDomain.categorical("label", 3, ["lo", "mid", "hi"])), target_index=1)
    gen = np.random.default_rng(11)
    x = gen.uniform(-1, 1, 120)
    label = np.digitize(x, [-1 / 3, 1 / 3])
    return Table(schema, np.column_stack([x, label]))
