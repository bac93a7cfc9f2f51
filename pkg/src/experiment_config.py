"""Experiment files: YAML sweeps over models x epsilon x (rows | cols).

Example::

    name: corr_cols
    dataset: {family: corr, n: 4000, d: 8}
    sweep: {axis: cols, values: [8, 16, 32]}
    epsilons: [0.1, 1, 10, inf]
    models:
      - name: mst
      - {name: privbayes, degree: 2}
    trainings: 5
    samples: 5
    output: results/corr_cols.csv

Validation errors raise ConfigError whose path names the offending field.
"""

import logging, math, os
from dataclasses import dataclass, field, fields
from typing import Any

import yaml

from src.config import config
from src.errors import ConfigError
from src.gan_common import OPTIMIZERS, GanConfig

logger = logging.getLogger(__name__)

FAMILIES = ("eye", "corr", "mix_unsup", "mix_sup")
AXES = ("rows", "cols")
MARGINAL_MODELS = ("independent", "privbayes", "mst")
GAN_MODELS = ("dpwgan", "pategan")
MODEL_NAMES = MARGINAL_MODELS + GAN_MODELS + ("real",)
GAN_OPTIONS = tuple(f.name for f in fields(GanConfig))
MODEL_OPTIONS = {
    "independent": ("bins",),
    "privbayes": ("bins", "degree"),
    "mst": ("bins",),
    "dpwgan": GAN_OPTIONS,
    "pategan": GAN_OPTIONS,
    "real": (),
}


@dataclass(frozen=True)
class DatasetConfig:
    family: str | None = None
    csv: str | None = None
    columns: tuple[dict, ...] = ()
    target: str | None = None
    n: int | None = None
    d: int | None = None

    @property
    def label(self) -> str:
        return self.family if self.family else os.path.splitext(os.path.basename(self.csv))[0]


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    values: tuple[int, ...]


@dataclass(frozen=True)
class ModelConfig:
    name: str
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    dataset: DatasetConfig
    sweep: SweepConfig
    epsilons: tuple[float, ...]
    models: tuple[ModelConfig, ...]
    delta: float = config.default_delta
    trainings: int = config.bench_trainings
    samples: int = config.bench_samples
    time_limit_minutes: float = config.bench_time_limit_minutes
    seed: int = 0
    test_fraction: float = config.bench_test_fraction
    output: str | None = None


def _require(data: dict, key: str, path: str) -> Any:
    if key not in data:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return data[key]


def _mapping(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected a mapping, got {type(value).__name__}")
    return value


def _positive_int(value: Any, path: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(path, f"must be an integer >= {minimum}, got {value!r}")
    return value


def _epsilon(value: Any, path: str) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", ".inf"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value) or value <= 0:
        raise ConfigError(path, f"must be a positive number or 'inf', got {value!r}")
    return float(value)


def _reject_unknown(data: dict, allowed, path: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        prefix = f"{path}." if path else ""
        raise ConfigError(f"{prefix}{unknown[0]}", "unknown field")


def _parse_dataset(data: Any) -> DatasetConfig:
    data = _mapping(data, "dataset")
    _reject_unknown(data, ("family", "csv", "columns", "target", "n", "d"), "dataset")
    family, csv = data.get("family"), data.get("csv")
    if (family is None) == (csv is None):
        raise ConfigError("dataset", "give exactly one of 'family' or 'csv'")
    if family is not None and family not in FAMILIES:
        raise ConfigError("dataset.family", f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
    columns = data.get("columns") or []
    if csv is not None and not columns:
        raise ConfigError("dataset.columns", "a CSV dataset needs its column schema")
    for i, col in enumerate(columns):
        _mapping(col, f"dataset.columns[{i}]")
    n = data.get("n")
    d = data.get("d")
    return DatasetConfig(family, csv, tuple(dict(c) for c in columns), data.get("target"),
                         None if n is None else _positive_int(n, "dataset.n"),
                         None if d is None else _positive_int(d, "dataset.d"))


def _parse_sweep(data: Any) -> SweepConfig:
    data = _mapping(data, "sweep")
    _reject_unknown(data, ("axis", "values"), "sweep")
    axis = _require(data, "axis", "sweep")
    if axis not in AXES:
        raise ConfigError("sweep.axis", f"must be 'rows' or 'cols', got {axis!r}")
    values = _require(data, "values", "sweep")
    if not isinstance(values, list) or not values:
        raise ConfigError("sweep.values", "must be a non-empty list")
    return SweepConfig(axis, tuple(_positive_int(v, f"sweep.values[{i}]") for i, v in enumerate(values)))


def _parse_model(data: Any, path: str) -> ModelConfig:
    if isinstance(data, str):
        data = {"name": data}
    data = _mapping(data, path)
    name = _require(data, "name", path)
    if name not in MODEL_NAMES:
        raise ConfigError(f"{path}.name", f"unknown model {name!r}; expected one of {', '.join(MODEL_NAMES)}")
    options = {k: v for k, v in data.items() if k != "name"}
    _reject_unknown(options, MODEL_OPTIONS[name], path)

    for key in ("bins", "degree", "noise_dim", "batch_size", "epochs", "critic_iterations", "teachers"):
        if key in options:
            _positive_int(options[key], f"{path}.{key}", minimum=2 if key in ("bins", "teachers") else 1)
    if "hidden" in options:
        hidden = options["hidden"]
        if not isinstance(hidden, list) or not hidden:
            raise ConfigError(f"{path}.hidden", "must be a non-empty list of layer sizes")
        options["hidden"] = tuple(_positive_int(h, f"{path}.hidden[{i}]") for i, h in enumerate(hidden))
    for key in ("clip_norm", "weight_clip", "learning_rate", "vote_noise_scale"):
        if key in options and options[key] is not None:
            value = options[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
                raise ConfigError(f"{path}.{key}", f"must be a positive number, got {value!r}")
            options[key] = float(value)
    for key in ("beta1", "beta2"):
        if key in options:
            value = options[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 <= value < 1:
                raise ConfigError(f"{path}.{key}", f"must lie in [0, 1), got {value!r}")
            options[key] = float(value)
    if "optimizer" in options and options["optimizer"] not in OPTIMIZERS:
        raise ConfigError(f"{path}.optimizer", f"must be one of {', '.join(OPTIMIZERS)}, "
                                                f"got {options['optimizer']!r}")
    return ModelConfig(name, options)


def parse_experiment(data: Any) -> ExperimentConfig:
    data = _mapping(data, "<root>")
    _reject_unknown(data, [f.name for f in fields(ExperimentConfig)], "")

    epsilons = _require(data, "epsilons", "")
    if not isinstance(epsilons, list) or not epsilons:
        raise ConfigError("epsilons", "must be a non-empty list")
    models = _require(data, "models", "")
    if not isinstance(models, list) or not models:
        raise ConfigError("models", "must be a non-empty list")

    delta = data.get("delta", config.default_delta)
    if isinstance(delta, bool) or not isinstance(delta, (int, float)) or not 0 <= delta < 1:
        raise ConfigError("delta", f"must lie in [0, 1), got {delta!r}")
    time_limit = data.get("time_limit_minutes", config.bench_time_limit_minutes)
    if isinstance(time_limit, bool) or not isinstance(time_limit, (int, float)) or time_limit < 0:
        raise ConfigError("time_limit_minutes", f"must be a non-negative number, got {time_limit!r}")
    test_fraction = data.get("test_fraction", config.bench_test_fraction)
    if isinstance(test_fraction, bool) or not isinstance(test_fraction, (int, float)) or not 0 < test_fraction < 1:
        raise ConfigError("test_fraction", f"must lie in (0, 1), got {test_fraction!r}")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed", f"must be a non-negative integer, got {seed!r}")

    experiment = ExperimentConfig(
        name=str(data.get("name", "experiment")),
        dataset=_parse_dataset(_require(data, "dataset", "")),
        sweep=_parse_sweep(_require(data, "sweep", "")),
        epsilons=tuple(_epsilon(e, f"epsilons[{i}]") for i, e in enumerate(epsilons)),
        models=tuple(_parse_model(m, f"models[{i}]") for i, m in enumerate(models)),
        delta=float(delta),
        trainings=_positive_int(data.get("trainings", config.bench_trainings), "trainings"),
        samples=_positive_int(data.get("samples", config.bench_samples), "samples"),
        time_limit_minutes=float(time_limit),
        seed=seed,
        test_fraction=float(test_fraction),
        output=data.get("output"),
    )
    if experiment.dataset.family is not None:
        other = "d" if experiment.sweep.axis == "rows" else "n"
        if getattr(experiment.dataset, other) is None:
            raise ConfigError(f"dataset.{other}", f"required for a '{experiment.sweep.axis}' sweep")
    return experiment


def load_experiment(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as file:
            data = yaml.safe_load(file)
    except FileNotFoundError:
        raise ConfigError(path, "experiment file not found")
    except yaml.YAMLError as e:
        raise ConfigError(path, f"invalid YAML: {e}")
    experiment = parse_experiment(data)
    logger.info("Loaded experiment '%s' from %s: %d model(s), %d epsilon(s), %s sweep over %s",
                experiment.name, path, len(experiment.models), len(experiment.epsilons),
                experiment.sweep.axis, list(experiment.sweep.values))
    return experiment


def experiment_to_dict(experiment: ExperimentConfig) -> dict:
    """Plain YAML-compatible structure that `parse_experiment` reads back unchanged."""
    ds = experiment.dataset
    dataset = {k: v for k, v in (("family", ds.family), ("csv", ds.csv), ("target", ds.target),
                                 ("n", ds.n), ("d", ds.d)) if v is not None}
    if ds.columns:
        dataset["columns"] = [dict(c) for c in ds.columns]
    models = []
    for m in experiment.models:
        options = {k: list(v) if isinstance(v, tuple) else v for k, v in m.options.items()}
        models.append({"name": m.name, **options})
    out = {
        "name": experiment.name,
        "dataset": dataset,
        "sweep": {"axis": experiment.sweep.axis, "values": list(experiment.sweep.values)},
        "epsilons": ["inf" if math.isinf(e) else e for e in experiment.epsilons],
        "models": models,
        "delta": experiment.delta,
        "trainings": experiment.trainings,
        "samples": experiment.samples,
        "time_limit_minutes": experiment.time_limit_minutes,
        "seed": experiment.seed,
        "test_fraction": experiment.test_fraction,
    }
    if experiment.output is not None:
        out["output"] = experiment.output
    return out
