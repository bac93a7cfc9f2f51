import itertools, logging, math
from dataclasses import dataclass

import numpy as np

from src.config import config
from src.errors import InputError
from src.independent import independent_fit, sample_categorical
from src.privacy_core import COUNT_SENSITIVITY, BudgetLedger, PrivacySpec, exponential_mechanism, laplace_mechanism
from src.synthesizer import FittedSynthesizer, private_access, require_discrete
from src.tabular_domain import Schema, Table, entropy_bits, marginal

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BayesNetwork:
    order: tuple[int, ...]
    parents: tuple[tuple[int, ...], ...]   # parents[k] belongs to order[k]

    def __post_init__(self):
        if sorted(self.order) != list(range(len(self.order))):
            raise InputError(f"network order {self.order} is not a permutation")
        placed: set[int] = set()
        for child, parents in zip(self.order, self.parents):
            if not set(parents) <= placed:
                raise InputError(f"parents {parents} of {child} are not placed before it")
            placed.add(child)

    @property
    def degree(self) -> int:
        return max((len(p) for p in self.parents), default=0)

    def edges(self) -> list[tuple[int, int]]:
        return [(p, child) for child, parents in zip(self.order, self.parents) for p in parents]


def mi_sensitivity(n: int) -> float:
    """Sensitivity (bits) of empirical mutual information under one-record changes."""
    return math.log2(n) / n + (n - 1) / n * math.log2(n / (n - 1))


class _EntropyCache:
    """Memoised joint entropies of attribute sets of one table."""

    def __init__(self, table: Table):
        self.table = table
        self._cache: dict[tuple[int, ...], float] = {}

    def __call__(self, attrs) -> float:
        key = tuple(sorted(attrs))
        if not key:
            return 0.0
        if key not in self._cache:
            self._cache[key] = entropy_bits(marginal(self.table, key).counts)
        return self._cache[key]

    def mutual_information(self, child: int, parents: tuple[int, ...]) -> float:
        return max(self((child,)) + self(parents) - self((child,) + parents), 0.0)


def candidate_parent_sets(placed: list[int], degree: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """Parent sets of up to `degree` placed attributes.

    Past `privbayes_enumeration_limit` placed attributes the sets are drawn
    from a uniformly random subset of that size; the draw uses only the rng.
    """
    limit = config.privbayes_enumeration_limit
    pool = placed if len(placed) <= limit else sorted(rng.choice(placed, limit, replace=False).tolist())
    return [combo for size in range(1, min(degree, len(pool)) + 1)
            for combo in itertools.combinations(pool, size)]


def learn_structure(table: Table, degree: int, epsilon_per_selection: float, ledger: BudgetLedger,
                    rng: np.random.Generator) -> BayesNetwork:
    d = table.d
    entropy = _EntropyCache(table)
    sensitivity = mi_sensitivity(table.n)

    root = int(rng.integers(d))
    order, parents = [root], [()]
    ledger.spend(f"privbayes:structure[{table.schema.columns[root].name}] (root, reserved)", epsilon_per_selection)
    logger.debug("PrivBayes root: %s", table.schema.columns[root].name)

    while len(order) < d:
        parent_sets = candidate_parent_sets(sorted(order), degree, rng)
        candidates = [(child, ps) for child in range(d) if child not in order for ps in parent_sets]
        scores = np.array([entropy.mutual_information(child, ps) for child, ps in candidates])
        pick = exponential_mechanism(scores, sensitivity, epsilon_per_selection, rng)
        child, ps = candidates[pick]
        order.append(child)
        parents.append(ps)
        ledger.spend(f"privbayes:structure[{table.schema.columns[child].name}]", epsilon_per_selection)
        logger.debug("PrivBayes selected %s <- %s (MI=%.4f of max %.4f)", child, ps, scores[pick], scores.max())

    return BayesNetwork(tuple(order), tuple(parents))


class PrivBayesModel(FittedSynthesizer):
    name = "privbayes"

    def __init__(self, schema: Schema, ledger: BudgetLedger, network: BayesNetwork,
                 conditionals: list[np.ndarray]):
        super().__init__(schema, ledger)
        self.network = network
        # conditionals[k] has axes (*parents, child) and sums to 1 over the child axis
        self.conditionals = conditionals

    def network_edges(self) -> list[tuple[int, int]]:
        return self.network.edges()

    def _sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.zeros((n, self.schema.d), dtype=np.int64)
        for child, parents, cond in zip(self.network.order, self.network.parents, self.conditionals):
            if parents:
                probs = cond[tuple(out[:, p] for p in parents)]
            else:
                probs = np.broadcast_to(cond, (n, cond.size))
            out[:, child] = sample_categorical(probs, rng)
        return out.astype(float)


def _conditional(noisy_counts: np.ndarray) -> np.ndarray:
    """Normalise over the last (child) axis; zero-mass parent configurations become uniform."""
    counts = np.clip(noisy_counts, 0.0, None)
    totals = counts.sum(axis=-1, keepdims=True)
    k = counts.shape[-1]
    empty = totals <= 0
    if np.any(empty):
        logger.debug("%d parent configuration(s) with zero mass use the uniform fallback", int(empty.sum()))
    return np.where(empty, 1.0 / k, counts / np.where(empty, 1.0, totals))


def privbayes_fit(train: Table, spec: PrivacySpec, seed: int, degree: int | None = None) -> FittedSynthesizer:
    """Greedy Bayesian network (eps/2 structure) plus noisy conditionals (eps/2 measurement)."""
    require_discrete(train, "PrivBayes")
    d = train.d
    if d == 1:
        logger.info("PrivBayes on a single column falls back to Independent")
        return independent_fit(train, spec, seed)
    if train.n < 2:
        raise InputError("PrivBayes needs at least two rows")
    if degree is None:
        degree = config.privbayes_wide_degree if d > config.privbayes_wide_threshold else config.privbayes_degree
    if degree < 1:
        raise InputError(f"degree must be >= 1, got {degree}")

    rng = np.random.default_rng(seed)
    ledger = BudgetLedger(spec)
    eps_slot = spec.epsilon / (2 * d)
    logger.info("PrivBayes fit: n=%d d=%d degree=%d, eps/2d=%.6g per structure/measurement slot",
                train.n, d, degree, eps_slot)

    conditionals = []
    with private_access(train) as data:
        network = learn_structure(data.table, degree, eps_slot, ledger, rng)
        for child, parents in zip(network.order, network.parents):
            counts = marginal(data.table, parents + (child,)).counts
            noisy = laplace_mechanism(counts, COUNT_SENSITIVITY.l1, eps_slot, rng)
            ledger.spend(f"privbayes:measure[{data.table.schema.columns[child].name}]", eps_slot)
            conditionals.append(_conditional(noisy))

    return PrivBayesModel(train.schema, ledger, network, conditionals).finish_fit()


privbayes_sample = PrivBayesModel.sample

