import logging, math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from src.config import config
from src.errors import InputError

logger = logging.getLogger(__name__)


class ColumnKind(Enum):
    """Column typing; bounds and cardinalities are public metadata"""
    CATEGORICAL = "categorical"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class ColumnDomain:
    name: str
    kind: ColumnKind
    cardinality: int | None = None
    lower: float | None = None
    upper: float | None = None
    bins: int | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind == ColumnKind.CATEGORICAL:
            if self.cardinality is None or self.cardinality < 2:
                raise InputError(f"column '{self.name}': categorical cardinality must be >= 2")
            if self.categories is not None and len(self.categories) != self.cardinality:
                raise InputError(f"column '{self.name}': {len(self.categories)} category names "
                                 f"for cardinality {self.cardinality}")
        else:
            if self.lower is None or self.upper is None or not (math.isfinite(self.lower) and math.isfinite(self.upper)):
                raise InputError(f"column '{self.name}': continuous bounds must be finite")
            if not self.lower < self.upper:
                raise InputError(f"column '{self.name}': lower bound {self.lower} >= upper bound {self.upper}")
            if self.bins is None or self.bins < 2:
                raise InputError(f"column '{self.name}': bin count must be >= 2")

    @classmethod
    def categorical(cls, name: str, cardinality: int, categories: Sequence[str] | None = None) -> "ColumnDomain":
        return cls(name, ColumnKind.CATEGORICAL, cardinality=int(cardinality),
                   categories=None if categories is None else tuple(str(c) for c in categories))

    @classmethod
    def continuous(cls, name: str, lower: float, upper: float, bins: int | None = None) -> "ColumnDomain":
        return cls(name, ColumnKind.CONTINUOUS, lower=float(lower), upper=float(upper),
                   bins=int(bins if bins is not None else config.default_bins))

    @property
    def is_categorical(self) -> bool:
        return self.kind == ColumnKind.CATEGORICAL

    @property
    def size(self) -> int:
        """Cardinality, or bin count for continuous columns."""
        return self.cardinality if self.is_categorical else self.bins


@dataclass(frozen=True)
class Schema:
    columns: tuple[ColumnDomain, ...]
    target_index: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise InputError(f"duplicate column names in schema: {names}")
        if not self.columns:
            raise InputError("schema needs at least one column")
        if self.target_index is not None and not 0 <= self.target_index < len(self.columns):
            raise InputError(f"target index {self.target_index} outside 0..{len(self.columns) - 1}")

    @property
    def d(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(c.size for c in self.columns)

    @property
    def is_discrete(self) -> bool:
        return all(c.is_categorical for c in self.columns)

    @property
    def continuous_indices(self) -> list[int]:
        return [i for i, c in enumerate(self.columns) if not c.is_categorical]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InputError(f"unknown column '{name}'")

    def select(self, indices: Sequence[int]) -> "Schema":
        """Sub-schema keeping `indices` in order; the target follows if kept."""
        indices = list(indices)
        target = None
        if self.target_index is not None and self.target_index in indices:
            target = indices.index(self.target_index)
        return Schema(tuple(self.columns[i] for i in indices), target)


class Table:
    """n x d dataset conforming to a Schema; rows are read-only."""

    def __init__(self, schema: Schema, rows):
        arr = np.array(rows, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != schema.d:
            raise InputError(f"rows must be an n x {schema.d} matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise InputError("a table needs at least one row")
        if not np.all(np.isfinite(arr)):
            raise InputError("table values must be finite")
        for i, col in enumerate(schema.columns):
            if col.is_categorical:
                codes = arr[:, i]
                if np.any(codes != np.floor(codes)) or codes.min() < 0 or codes.max() >= col.cardinality:
                    raise InputError(f"column '{col.name}': codes must be integers in [0, {col.cardinality})")
        arr.flags.writeable = False
        self._schema = schema
        self._rows = arr

    @property
    def schema(self) -> Schema:
        return self._schema

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def n(self) -> int:
        return self._rows.shape[0]

    @property
    def d(self) -> int:
        return self._rows.shape[1]

    def column(self, index: int) -> np.ndarray:
        return self._rows[:, index]

    def codes(self, attrs: Sequence[int] | None = None) -> np.ndarray:
        """Integer codes of categorical attributes (all columns by default)."""
        attrs = list(range(self.d)) if attrs is None else list(attrs)
        for a in attrs:
            if not self._schema.columns[a].is_categorical:
                raise InputError(f"column '{self._schema.columns[a].name}' is continuous; discretize first")
        return self._rows[:, attrs].astype(np.int64)

    def take(self, indices) -> "Table":
        return Table(self._schema, self._rows[np.asarray(indices)])

    def select_columns(self, indices: Sequence[int]) -> "Table":
        return Table(self._schema.select(indices), self._rows[:, list(indices)])

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Table(n={self.n}, d={self.d})"


@dataclass(frozen=True)
class MarginalTable:
    """Count (or probability) tensor with one axis per attribute in `attrs`."""
    attrs: tuple[int, ...]
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "attrs", tuple(int(a) for a in self.attrs))
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != len(self.attrs):
            raise InputError(f"marginal over {self.attrs} needs {len(self.attrs)} axes, got {counts.ndim}")
        object.__setattr__(self, "counts", counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts.shape

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def clamped(self) -> "MarginalTable":
        return MarginalTable(self.attrs, np.clip(self.counts, 0.0, None))

    def project(self, attrs: Sequence[int]) -> "MarginalTable":
        """Sum out every attribute not in `attrs`; axes follow `attrs` order."""
        attrs = tuple(attrs)
        missing = [a for a in attrs if a not in self.attrs]
        if missing:
            raise InputError(f"cannot project {self.attrs} onto {attrs}")
        drop = tuple(i for i, a in enumerate(self.attrs) if a not in attrs)
        summed = self.counts.sum(axis=drop) if drop else self.counts
        kept = [a for a in self.attrs if a in attrs]
        order = [kept.index(a) for a in attrs]
        return MarginalTable(attrs, np.transpose(summed, order))


def _check_attrs(table: Table, attrs: Sequence[int]) -> tuple[int, ...]:
    attrs = tuple(int(a) for a in attrs)
    if len(set(attrs)) != len(attrs):
        raise InputError(f"repeated attribute in {attrs}")
    for a in attrs:
        if not 0 <= a < table.d:
            raise InputError(f"attribute {a} outside 0..{table.d - 1}")
    return attrs


def discretize(table: Table, bins: int | None = None) -> Table:
    """Uniform binning of continuous columns into `bins` (default: each column's bin count)."""
    if table.schema.is_discrete:
        return table
    if bins is not None and bins < 2:
        raise InputError(f"bin count must be >= 2, got {bins}")

    columns = []
    out = np.array(table.rows, dtype=float)
    for i, col in enumerate(table.schema.columns):
        if col.is_categorical:
            columns.append(col)
            continue
        k = bins or col.bins
        values = table.column(i)
        outside = int(np.count_nonzero((values < col.lower) | (values > col.upper)))
        if outside:
            logger.warning("Column '%s': %d value(s) outside [%g, %g] clamped to the edge bins",
                           col.name, outside, col.lower, col.upper)
        codes = np.floor((values - col.lower) / (col.upper - col.lower) * k)
        out[:, i] = np.clip(codes, 0, k - 1)
        columns.append(ColumnDomain.categorical(col.name, k))
    return Table(Schema(tuple(columns), table.schema.target_index), out)


def decode_bins(table: Table, schema: Schema, rng: np.random.Generator) -> Table:
    """Map bin codes back onto `schema`: continuous values drawn uniformly inside their bin."""
    if table.d != schema.d:
        raise InputError(f"cannot decode {table.d} columns onto a {schema.d}-column schema")
    out = np.array(table.rows, dtype=float)
    for i, col in enumerate(schema.columns):
        if col.is_categorical:
            continue
        k = table.schema.columns[i].size
        width = (col.upper - col.lower) / k
        out[:, i] = col.lower + (table.column(i) + rng.random(table.n)) * width
    return Table(schema, out)


def marginal(table: Table, attrs: Sequence[int]) -> MarginalTable:
    attrs = _check_attrs(table, attrs)
    shape = tuple(table.schema.columns[a].size for a in attrs)
    if not attrs:
        return MarginalTable((), np.array(float(table.n)))
    codes = table.codes(attrs)
    flat = np.ravel_multi_index(tuple(codes.T), shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape))).astype(float)
    return MarginalTable(attrs, counts.reshape(shape))


def to_distribution(m: MarginalTable) -> MarginalTable:
    """Clamp negatives to zero and normalise; an all-zero table becomes uniform."""
    counts = np.clip(m.counts, 0.0, None)
    total = counts.sum()
    if total <= 0:
        logger.debug("Zero-mass marginal over %s replaced by uniform", m.attrs)
        return MarginalTable(m.attrs, np.full(counts.shape, 1.0 / max(counts.size, 1)))
    return MarginalTable(m.attrs, counts / total)


def entropy_bits(p: np.ndarray) -> float:
    """Shannon entropy in bits with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float).ravel()
    total = p.sum()
    if total <= 0:
        return 0.0
    p = p[p > 0] / total
    return float(-np.sum(p * np.log2(p)))


def joint_entropy(table: Table, attrs: Sequence[int]) -> float:
    if not attrs:
        return 0.0
    return entropy_bits(marginal(table, attrs).counts)


def set_mutual_information(table: Table, child: int, parents: Sequence[int]) -> float:
    """I(child; parents) in bits, the parent set treated as one joint variable."""
    parents = tuple(parents)
    _check_attrs(table, (child,) + parents)
    if not parents:
        return 0.0
    mi = joint_entropy(table, (child,)) + joint_entropy(table, parents) - joint_entropy(table, (child,) + parents)
    return max(mi, 0.0)


def mutual_information(table: Table, i: int, j: int, given: Sequence[int] = ()) -> float:
    """Empirical (conditional) mutual information I(i; j | given) in bits."""
    given = tuple(given)
    _check_attrs(table, (i, j) + given)
    h = joint_entropy
    mi = h(table, (i,) + given) + h(table, (j,) + given) - h(table, given) - h(table, (i, j) + given)
    return max(mi, 0.0)


def tvd_similarity(p: MarginalTable, q: MarginalTable) -> float:
    """1 - total variation distance of two normalised tables."""
    if p.shape != q.shape:
        raise InputError(f"shape mismatch {p.shape} vs {q.shape}")
    tvd = 0.5 * float(np.abs(p.counts - q.counts).sum())
    return float(min(1.0, max(0.0, 1.0 - tvd)))
