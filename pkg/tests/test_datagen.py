import numpy as np
import pytest

from src.datagen import (MIX_COMPONENTS, GaussFamily, GaussSpec, corr_covariance, gauss_schema, generate, load_csv,
                         ring_means, schema_from_config, split, write_csv)
from src.errors import InputError
from src.tabular_domain import Table


class TestGaussFamilies:

    def test_eye_shape_and_moments(self):
        table = generate(GaussSpec(GaussFamily.EYE, n=50_000, d=3, seed=1))
        assert (table.n, table.d) == (50_000, 3)
        assert np.abs(table.rows.mean(axis=0)).max() < 0.03
        assert np.abs(np.corrcoef(table.rows, rowvar=False) - np.eye(3)).max() < 0.03

    def test_corr_neighbour_correlation(self):
        table = generate(GaussSpec("corr", n=100_000, d=5, seed=2))
        corr = np.corrcoef(table.rows, rowvar=False)
        for i in range(4):
            assert corr[i, i + 1] == pytest.approx(0.5, abs=0.02)
        assert corr[0, 2] == pytest.approx(0.0, abs=0.02)

    def test_corr_covariance_is_tridiagonal(self):
        cov = corr_covariance(4)
        assert cov[1, 2] == 0.5 and cov[0, 2] == 0.0 and cov[3, 3] == 1.0

    def test_mix_sup_labels(self):
        table = generate(GaussSpec(GaussFamily.MIX_SUP, n=6000, d=4, seed=3))
        assert table.d == 5
        assert table.schema.target_index == 4
        assert set(np.unique(table.column(4)).astype(int)) == set(range(MIX_COMPONENTS))

    def test_mix_unsup_ring(self):
        table = generate(GaussSpec(GaussFamily.MIX_UNSUP, n=6000, d=3, seed=4))
        radius = np.hypot(table.column(0), table.column(1))
        assert np.median(radius) == pytest.approx(np.linalg.norm(ring_means()[0]), rel=0.1)
        assert table.schema.target_index is None

    def test_deterministic_under_seed(self):
        spec = GaussSpec(GaussFamily.CORR, n=100, d=3, seed=9)
        assert np.array_equal(generate(spec).rows, generate(spec).rows)

    @pytest.mark.parametrize("n, d", [(0, 3), (10, 1)])
    def test_invalid_spec(self, n, d):
        with pytest.raises(InputError):
            GaussSpec(GaussFamily.EYE, n=n, d=d)

    def test_public_bounds(self):
        schema = gauss_schema(2)
        assert schema.columns[0].lower == -6.0 and schema.columns[0].upper == 6.0


class TestCsv:

    @pytest.fixture
    def schema(self):
        return schema_from_config([
            {"name": "age", "type": "continuous", "lower": 0, "upper": 100, "bins": 10},
            {"name": "income", "type": "categorical", "categories": ["low", "high"]},
        ], target="income")

    def test_schema_from_config(self, schema):
        assert schema.names == ["age", "income"]
        assert schema.target_index == 1
        assert schema.columns[1].cardinality == 2

    def test_schema_from_config_errors(self):
        with pytest.raises(InputError):
            schema_from_config([{"name": "x", "type": "ordinal"}])
        with pytest.raises(InputError):
            schema_from_config([{"name": "x", "type": "categorical"}])

    def test_write_then_load(self, schema, tmp_path):
        table = Table(schema, [[31.5, 0], [0.1 + 0.2, 1]])
        path = str(tmp_path / "people.csv")
        write_csv(table, path)
        assert (tmp_path / "people.csv").read_text(encoding="utf-8").splitlines()[1] == "31.5,low"
        assert np.array_equal(load_csv(path, schema).rows, table.rows)

    def test_unknown_category_names_row(self, schema, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("age,income\n30,low\n40,medium\n", encoding="utf-8")
        with pytest.raises(InputError, match="row 2.*income.*medium"):
            load_csv(str(path), schema)

    def test_header_mismatch(self, schema, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("income,age\nlow,30\n", encoding="utf-8")
        with pytest.raises(InputError, match="header"):
            load_csv(str(path), schema)

    def test_unparseable_number(self, schema, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("age,income\nold,low\n", encoding="utf-8")
        with pytest.raises(InputError, match="row 1.*age"):
            load_csv(str(path), schema)


class TestSplit:

    def test_sizes_and_disjoint(self, corr_table):
        train, test = split(corr_table, 0.2, seed=0)
        assert (train.n, test.n) == (1600, 400)
        rows = {tuple(r) for r in corr_table.rows}
        assert {tuple(r) for r in train.rows} | {tuple(r) for r in test.rows} == rows
        assert not {tuple(r) for r in train.rows} & {tuple(r) for r in test.rows}

    def test_seeded(self, corr_table):
        assert np.array_equal(split(corr_table, 0.3, 5)[1].rows, split(corr_table, 0.3, 5)[1].rows)

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.5])
    def test_bad_fraction(self, corr_table, fraction):
        with pytest.raises(InputError):
            split(corr_table, fraction, 0)
