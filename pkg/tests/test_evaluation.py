import itertools

import numpy as np
import pytest

from src.classification import ClassificationResult, fit_logistic, logistic_fit_eval, score_predictions
from src.clustering import fit_diagonal_gmm, gmm_fit_silhouette, pca_project, pca_top2, silhouette
from src.datagen import GaussFamily, GaussSpec, generate, gauss_schema, split
from src.errors import InputError
from src.evaluation import (EvalReport, marginal_similarity, mi_similarity, mi_similarity_by_edges,
                            pair_mi_similarity, stat_correlations, stat_mean)
from src.tabular_domain import ColumnDomain, Schema, Table, discretize, mutual_information


def _categorical(*columns) -> Table:
    schema = Schema(tuple(ColumnDomain.categorical(f"c{i}", 2) for i in range(len(columns))))
    return Table(schema, np.column_stack(columns))


class TestEvalReport:

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            EvalReport("mi_similarity", float("nan"), "corr", "mst", 1.0, 100, 4, 0, 0)

    def test_infinite_epsilon_context(self):
        assert EvalReport("stat_mean", 0.1, "corr", "mst", float("inf"), 100, 4, 2, 3).sample == 3


class TestStatistics:

    def test_mean_of_constant_and_shift(self, corr_table):
        constant = Table(gauss_schema(3), np.full((10, 3), 1.5))
        assert stat_mean(constant) == pytest.approx(1.5)
        shifted = Table(corr_table.schema, corr_table.rows + 0.75)
        assert stat_mean(shifted) == pytest.approx(stat_mean(corr_table) + 0.75)

    def test_corr_gauss_correlations(self):
        table = generate(GaussSpec(GaussFamily.CORR, n=100_000, d=5, seed=1))
        neighbours, others = stat_correlations(table)
        assert neighbours == pytest.approx(0.5, abs=0.02)
        assert others == pytest.approx(0.0, abs=0.02)

    def test_duplicated_column(self, rng):
        x = rng.normal(size=500)
        table = Table(gauss_schema(3), np.column_stack([x, rng.normal(size=500), x]))
        assert stat_correlations(table)[1] == pytest.approx(1.0)

    def test_constant_column_counts_as_uncorrelated(self, rng):
        table = Table(gauss_schema(3), np.column_stack([rng.normal(size=50), np.zeros(50), rng.normal(size=50)]))
        neighbours, _ = stat_correlations(table)
        assert np.isfinite(neighbours)

    def test_errors(self, discrete_table, corr_table):
        with pytest.raises(InputError):
            stat_mean(discrete_table)
        with pytest.raises(InputError):
            stat_correlations(corr_table.select_columns([0, 1]))


class TestMarginalSimilarity:

    def test_identical(self, corr_table):
        assert marginal_similarity(corr_table, corr_table) == pytest.approx(1.0)

    def test_disjoint_and_half(self):
        real = _categorical(np.zeros(4))
        assert marginal_similarity(real, _categorical(np.ones(4))) == pytest.approx(0.0)
        assert marginal_similarity(real, _categorical(np.array([0, 0, 1, 1]))) == pytest.approx(0.5)

    def test_schema_mismatch(self, corr_table, discrete_table):
        with pytest.raises(InputError):
            marginal_similarity(corr_table, discrete_table)


class TestMiSimilarity:

    def test_pair_formula(self):
        assert pair_mi_similarity(0.0, 0.0) == 1.0
        assert pair_mi_similarity(1.0, 0.5) == pytest.approx(0.5)
        assert pair_mi_similarity(0.2, 1.0) == pytest.approx(0.2)

    def test_identical(self, discrete_table):
        assert mi_similarity(discrete_table, discrete_table) == pytest.approx(1.0)

    def test_lost_dependence(self):
        real = _categorical(np.array([0, 1, 0, 1]), np.array([0, 1, 0, 1]))
        synth = _categorical(np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1]))
        assert mi_similarity(real, synth) == pytest.approx(0.0)

    def test_matches_pair_loop(self, discrete_table, rng):
        synth = Table(discrete_table.schema, np.column_stack([rng.integers(0, k, 300)
                                                               for k in discrete_table.schema.sizes]))
        expected = np.mean([pair_mi_similarity(mutual_information(discrete_table, i, j),
                                               mutual_information(synth, i, j))
                            for i, j in itertools.combinations(range(3), 2)])
        assert mi_similarity(discrete_table, synth) == pytest.approx(expected)

    def test_split_by_edges(self, discrete_table, rng):
        synth = Table(discrete_table.schema, discrete_table.rows[rng.permutation(discrete_table.n)])
        connected, unconnected = mi_similarity_by_edges(discrete_table, synth, [(1, 0)])
        assert connected == pytest.approx(1.0)
        assert unconnected == pytest.approx(1.0)
        everything = [(0, 1), (0, 2), (1, 2)]
        assert mi_similarity_by_edges(discrete_table, synth, everything)[1] is None

    def test_binned_continuous(self, corr_table):
        shuffled = Table(corr_table.schema, np.column_stack(
            [np.random.default_rng(i).permutation(corr_table.column(i)) for i in range(corr_table.d)]))
        connected, _ = mi_similarity_by_edges(corr_table, shuffled, [(0, 1), (1, 2), (2, 3)], bins=10)
        assert connected < 0.5
        assert mi_similarity(discretize(corr_table, 10), discretize(corr_table, 10)) == pytest.approx(1.0)


class TestPca:

    def test_line(self, rng):
        t = rng.normal(size=400)
        pca = pca_top2(np.column_stack([t, 2 * t]))
        np.testing.assert_allclose(pca.basis[:, 0], np.array([1.0, 2.0]) / np.sqrt(5.0), atol=1e-9)
        assert pca.eigenvalues[1] == pytest.approx(0.0, abs=1e-9)

    def test_isotropic(self):
        x = np.random.default_rng(2).standard_normal((100_000, 3))
        pca = pca_top2(x)
        assert pca.eigenvalues == pytest.approx([1.0, 1.0], rel=0.05)
        np.testing.assert_allclose(pca.basis.T @ pca.basis, np.eye(2), atol=1e-9)

    def test_sign_convention(self, rng):
        x = rng.normal(size=(200, 4)) * np.array([3.0, 1.0, 0.5, 2.0])
        pca = pca_top2(x)
        for column in pca.basis.T:
            assert column[np.argmax(np.abs(column))] > 0

    def test_project_reproduces_fit(self, corr_table):
        pca = pca_top2(corr_table)
        np.testing.assert_allclose(pca_project(pca, corr_table), pca.points)

    def test_errors(self, rng):
        with pytest.raises(InputError):
            pca_top2(rng.normal(size=(10, 1)))
        with pytest.raises(InputError):
            pca_top2(rng.normal(size=(1, 3)))
        with pytest.raises(InputError):
            pca_project(pca_top2(rng.normal(size=(10, 3))), rng.normal(size=(5, 2)))


class TestGmmSilhouette:

    @staticmethod
    def _blobs(rng, n, centres):
        return np.vstack([rng.normal(size=(n, 2)) + c for c in centres])

    def test_separated_clusters(self, rng):
        train = self._blobs(rng, 300, [(0.0, 0.0), (30.0, 0.0)])
        test = self._blobs(rng, 100, [(0.0, 0.0), (30.0, 0.0)])
        assert gmm_fit_silhouette(train, test, k=2, seed=1) >= 0.9

    def test_single_gaussian(self, rng):
        score = gmm_fit_silhouette(rng.normal(size=(2000, 2)), rng.normal(size=(1000, 2)), k=2, seed=1)
        assert -1.0 <= score <= 0.45

    def test_fit_finds_centres(self, rng):
        x = self._blobs(rng, 400, [(-5.0, 0.0), (5.0, 0.0)])
        gmm = fit_diagonal_gmm(x, 2, rng)
        assert sorted(gmm.means[:, 0].round()) == [-5.0, 5.0]
        assert gmm.weights.sum() == pytest.approx(1.0)
        assert np.all(gmm.variances >= 1e-6)

    def test_silhouette_degenerate_labels(self, rng):
        points = rng.normal(size=(10, 2))
        assert silhouette(points, np.zeros(10, dtype=int)) == 0.0
        assert silhouette(points, np.arange(10)) == 0.0

    @pytest.mark.parametrize("k, test_rows", [(1, 10), (2, 0)])
    def test_errors(self, rng, k, test_rows):
        with pytest.raises(InputError):
            gmm_fit_silhouette(rng.normal(size=(50, 2)), rng.normal(size=(test_rows, 2)), k=k)

    def test_too_few_points(self, rng):
        with pytest.raises(InputError):
            fit_diagonal_gmm(rng.normal(size=(3, 2)), 6, rng)


class TestClassification:

    @pytest.fixture
    def separable(self, rng) -> Table:
        schema = Schema((ColumnDomain.continuous("x", -1.0, 1.0), ColumnDomain.categorical("y", 2)), target_index=1)
        x = np.concatenate([rng.uniform(-1.0, -0.2, 100), rng.uniform(0.2, 1.0, 100)])
        return Table(schema, np.column_stack([x, x > 0]))

    def test_separable(self, separable):
        assert logistic_fit_eval(separable, separable) == ClassificationResult(1.0, 1.0)

    def test_target_by_name_and_deterministic(self, separable):
        first = logistic_fit_eval(separable, separable, target="y")
        assert first == logistic_fit_eval(separable, separable, target=1)

    def test_constant_predictor_scores_zero_f1(self):
        result = score_predictions(np.array([0, 0, 0, 1]), np.zeros(4, dtype=int), classes=2)
        assert result == ClassificationResult(0.75, 0.0)

    def test_macro_f1(self):
        result = score_predictions(np.array([0, 1, 2, 2]), np.array([0, 1, 2, 1]), classes=3)
        assert result.accuracy == pytest.approx(0.75)
        assert result.f1 == pytest.approx(7 / 9)

    def test_fit_logistic_starts_from_zero(self):
        model = fit_logistic(np.zeros((4, 2)), np.array([0, 1, 0, 1]), classes=2)
        assert not model.weights.any()

    def test_errors(self, separable, mixed_table, corr_table):
        with pytest.raises(InputError):
            logistic_fit_eval(separable, mixed_table)
        with pytest.raises(InputError):
            logistic_fit_eval(corr_table, corr_table)
        with pytest.raises(InputError):
            logistic_fit_eval(separable, separable, target="x")
        with pytest.raises(InputError):
            logistic_fit_eval(mixed_table.select_columns([1]), mixed_table.select_columns([1]))

    @pytest.mark.slow
    def test_real_mix_sup_baseline(self):
        table = generate(GaussSpec(GaussFamily.MIX_SUP, n=16_000, d=8, seed=0))
        train, test = split(table, 0.2, seed=0)
        assert logistic_fit_eval(train, test).accuracy >= 0.5
