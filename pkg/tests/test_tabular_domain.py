import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import InputError
from src.tabular_domain import (ColumnDomain, MarginalTable, Schema, Table, decode_bins, discretize, entropy_bits,
                                marginal, mutual_information, set_mutual_information, to_distribution,
                                tvd_similarity)


def _binary_table(a, b) -> Table:
    schema = Schema((ColumnDomain.categorical("a", 2), ColumnDomain.categorical("b", 2)))
    return Table(schema, np.column_stack([a, b]))


class TestColumnDomain:

    @pytest.mark.parametrize("factory", [
        lambda: ColumnDomain.categorical("c", 1),
        lambda: ColumnDomain.categorical("c", 2, ["only-one"]),
        lambda: ColumnDomain.continuous("x", 1.0, 1.0),
        lambda: ColumnDomain.continuous("x", 0.0, float("inf")),
        lambda: ColumnDomain.continuous("x", 0.0, 1.0, bins=1),
    ])
    def test_invalid_domains(self, factory):
        with pytest.raises(InputError):
            factory()

    def test_sizes(self):
        assert ColumnDomain.categorical("c", 5).size == 5
        assert ColumnDomain.continuous("x", 0.0, 1.0, bins=7).size == 7
        assert ColumnDomain.continuous("x", 0.0, 1.0).size == 20


class TestSchemaAndTable:

    def test_duplicate_names(self):
        with pytest.raises(InputError):
            Schema((ColumnDomain.categorical("a", 2), ColumnDomain.categorical("a", 3)))

    def test_codes_must_be_in_domain(self):
        schema = Schema((ColumnDomain.categorical("a", 2),))
        with pytest.raises(InputError):
            Table(schema, [[2]])
        with pytest.raises(InputError):
            Table(schema, [[0.5]])

    def test_rejects_non_finite_and_bad_shape(self):
        schema = Schema((ColumnDomain.continuous("x", 0, 1),))
        with pytest.raises(InputError):
            Table(schema, [[np.nan]])
        with pytest.raises(InputError):
            Table(schema, [[0.1, 0.2]])

    def test_rows_are_read_only(self, discrete_table):
        with pytest.raises(ValueError):
            discrete_table.rows[0, 0] = 1

    def test_select_keeps_target(self, mixed_table):
        sub = mixed_table.select_columns([1])
        assert sub.schema.target_index == 0
        assert sub.schema.names == ["label"]

    def test_codes_rejects_continuous(self, mixed_table):
        with pytest.raises(InputError):
            mixed_table.codes([0])


class TestMarginal:

    def test_counts(self):
        table = _binary_table([0, 0, 1, 1, 1], [0, 1, 1, 1, 0])
        m = marginal(table, (0, 1))
        assert m.counts.tolist() == [[1, 1], [1, 2]]
        assert marginal(table, (1,)).counts.tolist() == [2, 3]
        assert m.total == 5

    def test_attribute_order_follows_request(self):
        table = _binary_table([0, 0, 1], [1, 1, 0])
        assert np.array_equal(marginal(table, (1, 0)).counts, marginal(table, (0, 1)).counts.T)

    @pytest.mark.parametrize("attrs", [(0, 0), (2,), (-1,)])
    def test_bad_attrs(self, attrs):
        with pytest.raises(InputError):
            marginal(_binary_table([0], [1]), attrs)

    def test_project(self):
        m = MarginalTable((0, 1), np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert m.project((1,)).counts.tolist() == [4.0, 6.0]
        assert m.project((1, 0)).counts.tolist() == [[1.0, 3.0], [2.0, 4.0]]
        with pytest.raises(InputError):
            m.project((2,))

    def test_to_distribution_clamps(self):
        dist = to_distribution(MarginalTable((0,), np.array([-2.0, 1.0, 3.0])))
        assert dist.counts.tolist() == pytest.approx([0.0, 0.25, 0.75])

    def test_to_distribution_uniform_fallback(self):
        dist = to_distribution(MarginalTable((0,), np.array([-1.0, -3.0, 0.0, 0.0])))
        assert dist.counts.tolist() == pytest.approx([0.25] * 4)


class TestDiscretize:

    def test_bins_and_bounds(self):
        schema = Schema((ColumnDomain.continuous("x", 0.0, 1.0, bins=4),))
        table = Table(schema, [[0.0], [0.24], [0.25], [0.99], [1.0], [-3.0], [7.0]])
        binned = discretize(table)
        assert binned.column(0).tolist() == [0, 0, 1, 3, 3, 0, 3]
        assert binned.schema.columns[0].cardinality == 4

    def test_bin_override(self, mixed_table):
        assert discretize(mixed_table, 10).schema.sizes == (10, 3)

    def test_idempotent(self, mixed_table):
        once = discretize(mixed_table)
        assert discretize(once) is once

    def test_decode_stays_inside_bin(self, mixed_table, rng):
        binned = discretize(mixed_table)
        decoded = decode_bins(binned, mixed_table.schema, rng)
        assert np.array_equal(discretize(decoded).rows, binned.rows)
        assert np.array_equal(decoded.column(1), mixed_table.column(1))


class TestInformation:

    def test_entropy_uniform(self):
        assert entropy_bits([1, 1, 1, 1]) == pytest.approx(2.0)
        assert entropy_bits([5, 0]) == 0.0

    def test_mutual_information_copy(self):
        table = _binary_table([0, 1, 0, 1], [0, 1, 0, 1])
        assert mutual_information(table, 0, 1) == pytest.approx(1.0)

    def test_mutual_information_independent(self):
        table = _binary_table([0, 0, 1, 1], [0, 1, 0, 1])
        assert mutual_information(table, 0, 1) == pytest.approx(0.0)

    def test_conditional_mutual_information(self):
        schema = Schema(tuple(ColumnDomain.categorical(n, 2) for n in "xyz"))
        x = np.array([0, 0, 1, 1, 0, 0, 1, 1])
        y = np.array([0, 1, 0, 1, 0, 1, 0, 1])
        table = Table(schema, np.column_stack([x, y, x ^ y]))
        assert mutual_information(table, 0, 1) == pytest.approx(0.0)
        assert mutual_information(table, 0, 1, given=(2,)) == pytest.approx(1.0)

    def test_set_mutual_information(self, discrete_table):
        assert set_mutual_information(discrete_table, 1, ()) == 0.0
        assert set_mutual_information(discrete_table, 1, (0,)) == pytest.approx(mutual_information(discrete_table, 1, 0))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=60))
    def test_mutual_information_symmetric_non_negative(self, pairs):
        schema = Schema((ColumnDomain.categorical("a", 3), ColumnDomain.categorical("b", 3)))
        table = Table(schema, np.array(pairs))
        forward = mutual_information(table, 0, 1)
        assert forward >= 0.0
        assert forward == pytest.approx(mutual_information(table, 1, 0), abs=1e-12)


class TestTvdSimilarity:

    def test_identical_and_disjoint(self):
        p = MarginalTable((0,), np.array([0.5, 0.5, 0.0, 0.0]))
        q = MarginalTable((0,), np.array([0.0, 0.0, 0.5, 0.5]))
        assert tvd_similarity(p, p) == pytest.approx(1.0)
        assert tvd_similarity(p, q) == pytest.approx(0.0)

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            tvd_similarity(MarginalTable((0,), np.ones(2) / 2), MarginalTable((0,), np.ones(3) / 3))

    @settings(max_examples=50)
    @given(st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4),
           st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4),
           st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4))
    def test_symmetric_and_triangle(self, a, b, c):
        p, q, r = (to_distribution(MarginalTable((0,), np.array(v))) for v in (a, b, c))
        assert tvd_similarity(p, q) == pytest.approx(tvd_similarity(q, p))
        # 1 - s is a distance
        assert (1 - tvd_similarity(p, r)) <= (1 - tvd_similarity(p, q)) + (1 - tvd_similarity(q, r)) + 1e-9
