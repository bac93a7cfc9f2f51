import csv, logging, math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np

from src.config import config
from src.errors import ConvergenceError, InputError
from src.tabular_domain import ColumnDomain, Schema, Table

logger = logging.getLogger(__name__)

MIX_COMPONENTS = 6
# Label of the component at each ring position; neighbours never share consecutive labels
RING_LABELS = (0, 2, 4, 1, 3, 5)


class GaussFamily(Enum):
    EYE = "eye"
    CORR = "corr"
    MIX_UNSUP = "mix_unsup"
    MIX_SUP = "mix_sup"


@dataclass(frozen=True)
class GaussSpec:
    family: GaussFamily
    n: int
    d: int
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "family", GaussFamily(self.family))
        if self.n < 1:
            raise InputError(f"n must be >= 1, got {self.n}")
        if self.d < 2:
            raise InputError(f"d must be >= 2, got {self.d}")


def gauss_schema(d: int, with_target: bool = False) -> Schema:
    bound = config.gauss_bound
    columns = [ColumnDomain.continuous(f"x{i}", -bound, bound) for i in range(d)]
    if with_target:
        columns.append(ColumnDomain.categorical("label", MIX_COMPONENTS))
        return Schema(tuple(columns), target_index=d)
    return Schema(tuple(columns))


def gen_eye_gauss(spec: GaussSpec) -> Table:
    """Independent standard normal columns."""
    if spec.family != GaussFamily.EYE:
        raise InputError(f"gen_eye_gauss called with family {spec.family.value}")
    rng = np.random.default_rng(spec.seed)
    return Table(gauss_schema(spec.d), rng.standard_normal((spec.n, spec.d)))


def corr_covariance(d: int, rho: float = 0.5) -> np.ndarray:
    cov = np.eye(d)
    idx = np.arange(d - 1)
    cov[idx, idx + 1] = rho
    cov[idx + 1, idx] = rho
    return cov


def gen_corr_gauss(spec: GaussSpec) -> Table:
    """Zero-mean normal with unit variances and 0.5 correlation between neighbouring columns."""
    if spec.family != GaussFamily.CORR:
        raise InputError(f"gen_corr_gauss called with family {spec.family.value}")
    rng = np.random.default_rng(spec.seed)
    try:
        chol = np.linalg.cholesky(corr_covariance(spec.d))
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"Cholesky factorisation of the Corr Gauss covariance failed: {e}")
    z = rng.standard_normal((spec.n, spec.d))
    return Table(gauss_schema(spec.d), z @ chol.T)


def ring_means() -> np.ndarray:
    angles = 2 * math.pi * np.arange(MIX_COMPONENTS) / MIX_COMPONENTS
    return config.mix_radius * np.column_stack([np.cos(angles), np.sin(angles)])


def gen_mix_gauss(spec: GaussSpec) -> Table:
    """Six-component ring mixture on columns 0-1, standard normal noise elsewhere.

    MIX_SUP appends a categorical `label` column (one label per component,
    ordered by RING_LABELS).
    """
    if spec.family not in (GaussFamily.MIX_UNSUP, GaussFamily.MIX_SUP):
        raise InputError(f"gen_mix_gauss called with family {spec.family.value}")
    rng = np.random.default_rng(spec.seed)
    component = rng.integers(0, MIX_COMPONENTS, size=spec.n)
    signal = ring_means()[component] + config.mix_component_std * rng.standard_normal((spec.n, 2))
    noise = rng.standard_normal((spec.n, spec.d - 2))
    rows = np.hstack([signal, noise])

    if spec.family == GaussFamily.MIX_SUP:
        labels = np.asarray(RING_LABELS)[component]
        return Table(gauss_schema(spec.d, with_target=True), np.column_stack([rows, labels]))
    return Table(gauss_schema(spec.d), rows)


GENERATORS = {
    GaussFamily.EYE: gen_eye_gauss,
    GaussFamily.CORR: gen_corr_gauss,
    GaussFamily.MIX_UNSUP: gen_mix_gauss,
    GaussFamily.MIX_SUP: gen_mix_gauss,
}


def generate(spec: GaussSpec) -> Table:
    logger.debug("Generating %s Gauss data n=%d d=%d seed=%d", spec.family.value, spec.n, spec.d, spec.seed)
    return GENERATORS[spec.family](spec)


def schema_from_config(columns: Sequence[Mapping[str, Any]], target: str | None = None) -> Schema:
    """Build a Schema from declared column metadata (the benchmark config format)."""
    domains = []
    for i, col in enumerate(columns):
        try:
            name = str(col['name'])
            kind = col['type']
        except KeyError as e:
            raise InputError(f"schema column {i}: missing key {e}")
        if kind == "categorical":
            categories = col.get('categories')
            cardinality = col.get('cardinality', len(categories) if categories else None)
            if cardinality is None:
                raise InputError(f"schema column '{name}': categorical needs categories or cardinality")
            domains.append(ColumnDomain.categorical(name, cardinality, categories))
        elif kind == "continuous":
            domains.append(ColumnDomain.continuous(name, col['lower'], col['upper'], col.get('bins')))
        else:
            raise InputError(f"schema column '{name}': unknown type '{kind}'")
    schema = Schema(tuple(domains))
    if target is not None:
        schema = Schema(schema.columns, schema.index_of(target))
    return schema


def load_csv(path: str, schema: Schema) -> Table:
    """Read a header-first, comma-separated UTF-8 file; rows stay in file order."""
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file, header row required")
        if [h.strip() for h in header] != schema.names:
            raise InputError(f"{path}: header {header} does not match schema columns {schema.names}")

        lookups = [
            {name: code for code, name in enumerate(c.categories)} if c.is_categorical and c.categories else None
            for c in schema.columns
        ]
        rows = []
        for row_number, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != schema.d:
                raise InputError(f"{path}: row {row_number} has {len(record)} fields, expected {schema.d}")
            rows.append([_parse_cell(path, row_number, col, lookup, cell.strip())
                         for col, lookup, cell in zip(schema.columns, lookups, record)])

    if not rows:
        raise InputError(f"{path}: no data rows")
    logger.info("Loaded %d rows x %d columns from %s", len(rows), schema.d, path)
    return Table(schema, rows)


def _parse_cell(path: str, row_number: int, col: ColumnDomain, lookup: dict | None, cell: str) -> float:
    if lookup is not None:
        try:
            return float(lookup[cell])
        except KeyError:
            raise InputError(f"{path}: row {row_number}, column '{col.name}': unknown category '{cell}'")
    try:
        value = float(cell)
    except ValueError:
        raise InputError(f"{path}: row {row_number}, column '{col.name}': cannot parse '{cell}'")
    if col.is_categorical and (value != int(value) or not 0 <= value < col.cardinality):
        raise InputError(f"{path}: row {row_number}, column '{col.name}': code '{cell}' outside [0, {col.cardinality})")
    return value


def write_csv(table: Table, path: str) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(table.schema.names)
        for record in table.rows:
            writer.writerow([_format_cell(col, v) for col, v in zip(table.schema.columns, record)])
    logger.info("Wrote %d rows to %s", table.n, path)


def _format_cell(col: ColumnDomain, value: float) -> str:
    if col.is_categorical:
        code = int(value)
        return col.categories[code] if col.categories else str(code)
    return repr(float(value))


def split(table: Table, test_fraction: float, seed: int) -> tuple[Table, Table]:
    """Seeded shuffle, then the first round(n * fraction) rows form the test part."""
    if not 0 < test_fraction < 1:
        raise InputError(f"test fraction must lie in (0, 1), got {test_fraction}")
    n_test = int(round(table.n * test_fraction))
    if n_test == 0 or n_test == table.n:
        raise InputError(f"splitting {table.n} rows at {test_fraction} leaves an empty side")
    order = np.random.default_rng(seed).permutation(table.n)
    return table.take(np.sort(order[n_test:])), table.take(np.sort(order[:n_test]))
