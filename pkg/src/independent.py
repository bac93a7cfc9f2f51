import logging

import numpy as np

from src.privacy_core import COUNT_SENSITIVITY, BudgetLedger, PrivacySpec, laplace_mechanism
from src.synthesizer import FittedSynthesizer, private_access, require_discrete
from src.tabular_domain import MarginalTable, Schema, Table, marginal, to_distribution

logger = logging.getLogger(__name__)


def sample_categorical(probabilities: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw per row of a (rows x k) probability matrix, by inverse CDF."""
    cumulative = np.cumsum(probabilities, axis=1)
    u = rng.random(probabilities.shape[0]) * cumulative[:, -1]
    codes = (cumulative < u[:, None]).sum(axis=1)
    return np.minimum(codes, probabilities.shape[1] - 1)


class IndependentModel(FittedSynthesizer):
    name = "independent"

    def __init__(self, schema: Schema, ledger: BudgetLedger, distributions: list[MarginalTable]):
        super().__init__(schema, ledger)
        self.distributions = distributions

    def _sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        columns = []
        for dist in self.distributions:
            p = np.broadcast_to(dist.counts, (n, dist.counts.size))
            columns.append(sample_categorical(p, rng))
        return np.column_stack(columns).astype(float)


def independent_fit(train: Table, spec: PrivacySpec, seed: int) -> IndependentModel:
    """Noisy 1-way marginal per column, each measured with eps/d."""
    require_discrete(train, "Independent")
    rng = np.random.default_rng(seed)
    ledger = BudgetLedger(spec)
    d = train.d
    per_column = spec.epsilon / d
    logger.info("Independent fit: n=%d d=%d, eps/d=%.6g per column", train.n, d, per_column)

    distributions = []
    with private_access(train) as data:
        for i, col in enumerate(data.table.schema.columns):
            counts = marginal(data.table, (i,))
            noisy = laplace_mechanism(counts.counts, COUNT_SENSITIVITY.l1, per_column, rng)
            ledger.spend(f"independent:oneway[{col.name}]", per_column)
            distributions.append(to_distribution(MarginalTable((i,), noisy)))

    return IndependentModel(train.schema, ledger, distributions).finish_fit()


independent_sample = IndependentModel.sample
