"""Benchmark sweeps: models x epsilon x (rows | cols), m fits x s samples per point.

Each point owns its seeds, ledger and model state, so points run in worker
threads; rows are assembled in sweep order regardless of completion order.
"""

import asyncio, logging, time
from dataclasses import dataclass, replace
from typing import Callable, TypeVar

import numpy as np

from src.classification import logistic_fit_eval
from src.clustering import gmm_fit_silhouette, pca_project, pca_top2
from src.datagen import GaussSpec, generate, load_csv, schema_from_config, split
from src.dpwgan import dpwgan_fit
from src.evaluation import (EvalReport, marginal_similarity, mi_similarity, mi_similarity_by_edges,
                            stat_correlations, stat_mean)
from src.experiment_config import DatasetConfig, ExperimentConfig, ModelConfig
from src.gan_common import GanConfig
from src.independent import independent_fit
from src.mst import mst_fit
from src.pategan import pategan_fit
from src.privacy_core import BudgetLedger, PrivacySpec
from src.privbayes import privbayes_fit
from src.report import STATUS_ERROR, STATUS_OK, STATUS_TIMEOUT, ReportRow
from src.synthesizer import FittedSynthesizer, fit_on_schema
from src.tabular_domain import Schema, Table
from src.tabular_encoder import encode_features

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Report order of metrics within a point
METRICS = ("marginal_similarity", "mi_similarity", "mi_similarity_connected", "mi_similarity_unconnected",
           "stat_mean", "stat_corr_offdiag", "stat_corr_other", "silhouette", "accuracy", "f1")

MARGINAL_FITS = {"independent": independent_fit, "privbayes": privbayes_fit, "mst": mst_fit}
GAN_FITS = {"dpwgan": dpwgan_fit, "pategan": pategan_fit}


class RealData(FittedSynthesizer):
    """Non-private baseline: 'samples' are the training rows themselves."""

    name = "real"

    def __init__(self, train: Table, spec: PrivacySpec):
        super().__init__(train.schema, BudgetLedger(spec))
        self._rows = train.rows

    def _sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n == self._rows.shape[0]:
            return self._rows
        return self._rows[rng.choice(self._rows.shape[0], n, replace=n > self._rows.shape[0])]


def fit_model(model: ModelConfig, train: Table, spec: PrivacySpec, seed: int) -> FittedSynthesizer:
    options = dict(model.options)
    if model.name in MARGINAL_FITS:
        bins = options.pop("bins", None)
        return fit_on_schema(MARGINAL_FITS[model.name], train, spec, seed, bins=bins, **options)
    if model.name in GAN_FITS:
        return GAN_FITS[model.name](train, spec, seed, GanConfig.from_config(**options))
    if model.name == "real":
        return RealData(train, spec)
    raise ValueError(f"unknown model '{model.name}'")


def time_section(label: str, action: Callable[[], T]) -> tuple[T, float]:
    """Run `action`, returning its result and the wall time in minutes (monotonic clock)."""
    start = time.monotonic()
    result = action()
    minutes = (time.monotonic() - start) / 60.0
    logger.debug("%s took %.4f min", label, minutes)
    return result, minutes


@dataclass(frozen=True)
class Dataset:
    label: str
    n: int
    d: int
    train: Table
    test: Table


def _subset_columns(table: Table, count: int) -> Table:
    schema = table.schema
    features = [i for i in range(schema.d) if i != schema.target_index]
    if count > len(features):
        raise ValueError(f"cols sweep asks for {count} feature columns, dataset has {len(features)}")
    keep = features[:count] + ([schema.target_index] if schema.target_index is not None else [])
    return table.select_columns(keep)


def prepare_dataset(ds: DatasetConfig, axis: str, value: int, experiment: ExperimentConfig,
                    source: Table | None = None) -> Dataset:
    if ds.family is not None:
        n, d = (value, ds.d) if axis == "rows" else (ds.n, value)
        table = generate(GaussSpec(ds.family, n, d, experiment.seed))
    else:
        table = source
        if axis == "rows":
            if value > table.n:
                raise ValueError(f"rows sweep asks for {value} rows, dataset has {table.n}")
            order = np.random.default_rng(experiment.seed).permutation(table.n)
            table = table.take(np.sort(order[:value]))
        else:
            table = _subset_columns(table, value)
    train, test = split(table, experiment.test_fraction, experiment.seed)
    d = table.d - (1 if table.schema.target_index is not None else 0)
    return Dataset(ds.label, table.n, d, train, test)


def evaluate(train: Table, test: Table, synth: Table, edges: list[tuple[int, int]], seed: int) -> dict[str, float]:
    """Every metric that applies to the schema; classification and clustering use the real test split."""
    schema: Schema = train.schema
    out = {"marginal_similarity": marginal_similarity(train, synth)}
    if schema.d >= 2:
        out["mi_similarity"] = mi_similarity(train, synth)
        if edges:
            connected, unconnected = mi_similarity_by_edges(train, synth, edges)
            if connected is not None:
                out["mi_similarity_connected"] = connected
            if unconnected is not None:
                out["mi_similarity_unconnected"] = unconnected

    continuous = schema.continuous_indices
    if continuous:
        out["stat_mean"] = stat_mean(synth)
    if len(continuous) >= 3:
        out["stat_corr_offdiag"], out["stat_corr_other"] = stat_correlations(synth)

    features = encode_features(synth)
    if features.shape[1] >= 2 and synth.n >= 2:
        pca = pca_top2(features)
        out["silhouette"] = gmm_fit_silhouette(pca.points, pca_project(pca, encode_features(test)), seed=seed)

    if schema.target_index is not None:
        result = logistic_fit_eval(synth, test)
        out["accuracy"], out["f1"] = result.accuracy, result.f1
    return out


@dataclass(frozen=True)
class Point:
    index: int
    model: ModelConfig
    epsilon: float
    value: int


def _summary_rows(point: Point, dataset: Dataset, reports: list[EvalReport], fit_minutes: list[float],
                  sample_minutes: list[float]) -> list[ReportRow]:
    """One row per metric: mean and std over the m x s synthetic tables."""
    samples: dict[str, list[float]] = {}
    for report in reports:
        samples.setdefault(report.metric, []).append(report.value)
    fit_mean = float(np.mean(fit_minutes)) if fit_minutes else None
    sample_mean = float(np.mean(sample_minutes)) if sample_minutes else None
    rows = []
    for metric in METRICS:
        values = samples.get(metric)
        if not values:
            continue
        rows.append(ReportRow(dataset.label, point.model.name, point.epsilon, dataset.n, dataset.d, metric,
                              float(np.mean(values)), float(np.std(values)), len(values), fit_mean, sample_mean))
    return rows


def run_point(point: Point, dataset: Dataset | Exception, experiment: ExperimentConfig,
              record_timing: bool = True) -> list[ReportRow]:
    """m fits (seeds base+0..m-1) with s samples each; a timeout or error ends the point.

    With `record_timing` off the timing columns stay empty; the time limit
    still applies to the measured fit time.
    """
    rows = _run_point(point, dataset, experiment)
    if record_timing:
        return rows
    return [replace(row, fit_minutes=None, sample_minutes=None) for row in rows]


def _run_point(point: Point, dataset: Dataset | Exception, experiment: ExperimentConfig) -> list[ReportRow]:
    name, eps = point.model.name, point.epsilon
    label = f"{name} eps={eps:g} {experiment.sweep.axis}={point.value}"
    fit_minutes: list[float] = []
    sample_minutes: list[float] = []
    reports: list[EvalReport] = []
    try:
        if isinstance(dataset, Exception):
            raise dataset
        spec = PrivacySpec(eps, experiment.delta)
        logger.info("Point %d: %s on %s (n=%d, d=%d)", point.index, label, dataset.label, dataset.n, dataset.d)
        for r in range(experiment.trainings):
            seed = experiment.seed + r
            model, minutes = time_section(f"{label} fit {r}", lambda: fit_model(point.model, dataset.train, spec, seed))
            fit_minutes.append(minutes)
            if minutes >= experiment.time_limit_minutes:
                logger.warning("%s: fit %d took %.3f min >= limit %.3g min; point marked timeout",
                               label, r, minutes, experiment.time_limit_minutes)
                return [ReportRow(dataset.label, name, eps, dataset.n, dataset.d, None, None, None, 0,
                                  float(np.mean(fit_minutes)), None, timeout=True, status=STATUS_TIMEOUT)]
            edges = model.network_edges()
            for j in range(experiment.samples):
                sample_seed = experiment.seed + 10_000 * (r + 1) + j
                synth, minutes = time_section(f"{label} sample {r}.{j}",
                                              lambda: model.sample(dataset.train.n, sample_seed))
                sample_minutes.append(minutes)
                for metric, value in evaluate(dataset.train, dataset.test, synth, edges, sample_seed).items():
                    reports.append(EvalReport(metric, value, dataset.label, name, eps, dataset.n, dataset.d, r, j))
    except Exception as e:
        logger.exception("Point %d (%s) failed: %s", point.index, label, e)
        n = dataset.n if isinstance(dataset, Dataset) else 0
        d = dataset.d if isinstance(dataset, Dataset) else 0
        ds_label = dataset.label if isinstance(dataset, Dataset) else experiment.dataset.label
        return [ReportRow(ds_label, name, eps, n, d, None, None, None, 0,
                          float(np.mean(fit_minutes)) if fit_minutes else None, None,
                          status=STATUS_ERROR, error=f"{type(e).__name__}: {e}")]
    return _summary_rows(point, dataset, reports, fit_minutes, sample_minutes)


def sweep_points(experiment: ExperimentConfig) -> list[Point]:
    """Deterministic order: model, then epsilon, then axis value."""
    points = []
    for model in experiment.models:
        for eps in experiment.epsilons:
            for value in experiment.sweep.values:
                points.append(Point(len(points), model, eps, value))
    return points


def _prepare_all(experiment: ExperimentConfig) -> dict[int, Dataset | Exception]:
    ds = experiment.dataset
    source = None
    if ds.csv is not None:
        source = load_csv(ds.csv, schema_from_config(ds.columns, ds.target))
    prepared: dict[int, Dataset | Exception] = {}
    for value in experiment.sweep.values:
        try:
            prepared[value] = prepare_dataset(ds, experiment.sweep.axis, value, experiment, source)
        except Exception as e:
            logger.error("Dataset for %s=%d could not be prepared: %s", experiment.sweep.axis, value, e)
            prepared[value] = e
    return prepared


async def _run_async(experiment: ExperimentConfig, jobs: int) -> list[list[ReportRow]]:
    datasets = _prepare_all(experiment)
    semaphore = asyncio.Semaphore(jobs)

    async def guarded(point: Point) -> list[ReportRow]:
        async with semaphore:
            return await asyncio.to_thread(run_point, point, datasets[point.value], experiment, jobs == 1)

    return await asyncio.gather(*(guarded(p) for p in sweep_points(experiment)))


def run_experiment(experiment: ExperimentConfig, jobs: int = 1) -> list[ReportRow]:
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    points = len(experiment.models) * len(experiment.epsilons) * len(experiment.sweep.values)
    logger.info("Experiment '%s': %d point(s), %d x %d repetitions each, %d worker(s)",
                experiment.name, points, experiment.trainings, experiment.samples, jobs)
    if jobs > 1:
        logger.warning("Running %d workers concurrently: fit and sample times are left blank", jobs)
    per_point = asyncio.run(_run_async(experiment, jobs))
    rows = [row for block in per_point for row in block]
    failed = sum(1 for row in rows if row.status != STATUS_OK)
    logger.info("Experiment '%s' finished: %d row(s), %d failed or timed-out point(s)",
                experiment.name, len(rows), failed)
    return rows
