import logging
from abc import ABC, abstractmethod
from contextlib import contextmanager
from typing import Callable, Iterator

import numpy as np

from src.errors import InputError, PrivacyViolationError
from src.privacy_core import BudgetLedger, PrivacySpec
from src.tabular_domain import Schema, Table, decode_bins, discretize

logger = logging.getLogger(__name__)


class PrivateData:
    """Read handle on the training table, revoked once the fit returns.

    Anything retained by a fitted model and touched during sampling raises
    PrivacyViolationError instead of silently reading private rows.
    """

    def __init__(self, table: Table):
        self._table = table
        self._sealed = False

    def seal(self) -> None:
        self._sealed = True
        self._table = None

    @property
    def table(self) -> Table:
        if self._sealed:
            raise PrivacyViolationError("training data accessed after fit completed")
        return self._table


@contextmanager
def private_access(table: Table) -> Iterator[PrivateData]:
    handle = PrivateData(table)
    try:
        yield handle
    finally:
        handle.seal()


class FittedSynthesizer(ABC):
    """Trained generator; sampling reads only fitted parameters."""

    name: str = "synthesizer"

    def __init__(self, schema: Schema, ledger: BudgetLedger):
        self.schema = schema
        self.ledger = ledger

    @abstractmethod
    def _sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        ...

    def sample(self, n: int, seed: int) -> Table:
        if n < 1:
            raise InputError(f"sample size must be >= 1, got {n}")
        rng = np.random.default_rng(seed)
        return Table(self.schema, self._sample_rows(int(n), rng))

    def network_edges(self) -> list[tuple[int, int]]:
        """Attribute pairs the model measured jointly (empty for models without a graph)."""
        return []

    def finish_fit(self) -> "FittedSynthesizer":
        self.ledger.assert_within_budget()
        logger.info("%s fitted: spent eps=%.6g delta=%.3g of %s in %d ledger entries",
                    self.name, self.ledger.epsilon_spent, self.ledger.delta_spent,
                    self.ledger.total, len(self.ledger.entries))
        return self


def require_discrete(table: Table, model: str) -> None:
    if not table.schema.is_discrete:
        raise InputError(f"{model} needs a discretized table; call discretize() first")


class DecodedSynthesizer(FittedSynthesizer):
    """Wraps a model fitted on binned data and returns rows in the original schema."""

    def __init__(self, inner: FittedSynthesizer, schema: Schema):
        super().__init__(schema, inner.ledger)
        self.inner = inner
        self.name = inner.name

    def _sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        binned = Table(self.inner.schema, self.inner._sample_rows(n, rng))
        return decode_bins(binned, self.schema, rng).rows

    def network_edges(self) -> list[tuple[int, int]]:
        return self.inner.network_edges()


FitFunction = Callable[..., FittedSynthesizer]


def fit_on_schema(fit: FitFunction, train: Table, spec: PrivacySpec, seed: int,
                  bins: int | None = None, **options) -> FittedSynthesizer:
    """Discretize with public bounds, fit a marginal model, decode samples back."""
    if train.schema.is_discrete:
        return fit(train, spec, seed=seed, **options)
    model = fit(discretize(train, bins), spec, seed=seed, **options)
    return DecodedSynthesizer(model, train.schema)
