import itertools, logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import DisjointSet

from src.config import config
from src.errors import BudgetError, ConvergenceError, InputError
from src.independent import sample_categorical
from src.privacy_core import COUNT_SENSITIVITY, BudgetLedger, PrivacySpec, exponential_mechanism, gaussian_mechanism
from src.synthesizer import FittedSynthesizer, PrivateData, private_access, require_discrete
from src.tabular_domain import MarginalTable, Schema, Table, marginal, to_distribution

logger = logging.getLogger(__name__)

# Entries are floored so IPF scaling stays well defined
PROBABILITY_FLOOR = 1e-12

Edge = tuple[int, int]


@dataclass
class TreeModel:
    measured_oneways: list[MarginalTable]
    edges: list[Edge]
    measured_twoways: dict[Edge, MarginalTable]
    fitted: dict[Edge, np.ndarray] = field(default_factory=dict)
    targets: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        d = len(self.measured_oneways)
        if len(self.edges) != d - 1:
            raise InputError(f"a spanning tree over {d} attributes needs {d - 1} edges, got {len(self.edges)}")
        ds = DisjointSet(range(d))
        for a, b in self.edges:
            if not ds.merge(a, b):
                raise InputError(f"edge {(a, b)} closes a cycle")


def _noisy_record_count(measured_oneways: list[MarginalTable]) -> float:
    totals = [m.clamped().total for m in measured_oneways]
    return max(float(np.mean(totals)), 1.0)


def selection_weights(table: Table, measured_oneways: list[MarginalTable]) -> dict[Edge, float]:
    """L1 gap between each true 2-way marginal and the independence estimate from noisy 1-ways."""
    n_hat = _noisy_record_count(measured_oneways)
    dists = [to_distribution(m).counts for m in measured_oneways]
    weights = {}
    for a, b in itertools.combinations(range(table.d), 2):
        x = marginal(table, (a, b)).counts
        x_hat = n_hat * np.outer(dists[a], dists[b])
        weights[(a, b)] = float(np.abs(x - x_hat).sum())
    return weights


def mst_select(data: PrivateData | Table, epsilon_selection: float, measured_oneways: list[MarginalTable],
               rng: np.random.Generator, ledger: BudgetLedger | None = None) -> list[Edge]:
    """Noisy Kruskal: each of the d-1 additions is an exponential-mechanism pick over crossing edges."""
    table = data.table if isinstance(data, PrivateData) else data
    d = table.d
    if d < 2:
        raise InputError("MST selection needs at least two attributes")

    weights = selection_weights(table, measured_oneways)
    eps_edge = epsilon_selection / (d - 1)
    ds = DisjointSet(range(d))
    candidates = list(weights)
    edges: list[Edge] = []
    for step in range(d - 1):
        candidates = [e for e in candidates if not ds.connected(*e)]
        scores = np.array([weights[e] for e in candidates])
        edge = candidates[exponential_mechanism(scores, COUNT_SENSITIVITY.l1, eps_edge, rng)]
        ds.merge(*edge)
        edges.append(edge)
        if ledger is not None:
            ledger.spend(f"mst:select[{step}]", eps_edge)
        logger.debug("MST edge %d: %s (weight %.1f, max %.1f)", step, edge, weights[edge], scores.max())
    return edges


def _consensus_targets(model: TreeModel) -> list[np.ndarray]:
    """Inverse-variance average of each attribute's 1-way and its incident edge projections."""
    targets = []
    for i, oneway in enumerate(model.measured_oneways):
        estimates = [to_distribution(oneway).counts]
        weights = [1.0]
        for edge, twoway in model.measured_twoways.items():
            if i in edge:
                other = edge[1] if edge[0] == i else edge[0]
                estimates.append(to_distribution(twoway).project((i,)).counts)
                weights.append(1.0 / twoway.counts.shape[edge.index(other)])
        target = np.average(np.stack(estimates), axis=0, weights=weights)
        target = np.maximum(target, PROBABILITY_FLOOR)
        targets.append(target / target.sum())
    return targets


def fit_tree(model: TreeModel) -> TreeModel:
    """IPF on the tree: scale each edge table until both projections match the shared targets."""
    targets = _consensus_targets(model)
    fitted = {}
    for edge, twoway in model.measured_twoways.items():
        p = np.maximum(to_distribution(twoway).counts, PROBABILITY_FLOOR)
        fitted[edge] = p / p.sum()

    for round_ in range(1, config.mst_max_ipf_rounds + 1):
        for (a, b), p in fitted.items():
            p *= (targets[a] / p.sum(axis=1))[:, None]
            p *= (targets[b] / p.sum(axis=0))[None, :]
        gap = max((float(np.abs(p.sum(axis=1) - targets[a]).sum() + np.abs(p.sum(axis=0) - targets[b]).sum())
                   for (a, b), p in fitted.items()), default=0.0)
        # half the tolerance so any two edges sharing an attribute agree within it
        if gap <= config.mst_ipf_tolerance / 2:
            logger.debug("Tree IPF converged after %d round(s), gap %.2e", round_, gap)
            model.fitted = fitted
            model.targets = targets
            return model
    raise ConvergenceError(f"tree IPF did not converge in {config.mst_max_ipf_rounds} rounds (gap {gap:.3e})")


class MSTModel(FittedSynthesizer):
    name = "mst"

    def __init__(self, schema: Schema, ledger: BudgetLedger, tree: TreeModel, root: int = 0):
        super().__init__(schema, ledger)
        self.tree = tree
        self.root = root
        self._plan = self._traversal()

    def network_edges(self) -> list[Edge]:
        return list(self.tree.edges)

    def _traversal(self) -> list[tuple[int, int, np.ndarray]]:
        """(parent, child, child|parent conditional) in breadth-first order from the root."""
        adjacency: dict[int, list[Edge]] = {i: [] for i in range(self.schema.d)}
        for edge in self.tree.edges:
            adjacency[edge[0]].append(edge)
            adjacency[edge[1]].append(edge)

        plan, seen, queue = [], {self.root}, deque([self.root])
        while queue:
            parent = queue.popleft()
            for edge in adjacency[parent]:
                child = edge[1] if edge[0] == parent else edge[0]
                if child in seen:
                    continue
                joint = self.tree.fitted[edge] if edge[0] == parent else self.tree.fitted[edge].T
                totals = joint.sum(axis=1, keepdims=True)
                cond = np.where(totals > 0, joint / np.where(totals > 0, totals, 1.0), 1.0 / joint.shape[1])
                plan.append((parent, child, cond))
                seen.add(child)
                queue.append(child)
        return plan

    def _sample_rows(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.zeros((n, self.schema.d), dtype=np.int64)
        root_dist = self.tree.targets[self.root]
        out[:, self.root] = sample_categorical(np.broadcast_to(root_dist, (n, root_dist.size)), rng)
        for parent, child, cond in self._plan:
            out[:, child] = sample_categorical(cond[out[:, parent]], rng)
        return out.astype(float)


def mst_fit(train: Table, spec: PrivacySpec, seed: int) -> MSTModel:
    """Select a maximum spanning tree with eps/3, measure 1-ways and tree 2-ways with 2eps/3 (Gaussian)."""
    require_discrete(train, "MST")
    d = train.d
    if d < 2:
        raise InputError("MST needs at least two attributes")
    if not spec.is_infinite and spec.delta <= 0:
        raise BudgetError("MST measures with the Gaussian mechanism and needs delta > 0")

    rng = np.random.default_rng(seed)
    ledger = BudgetLedger(spec)
    eps_select = spec.epsilon / 3
    measured_count = 2 * d - 1
    eps_measure = 2 * spec.epsilon / 3 / measured_count
    delta_measure = spec.delta / measured_count
    logger.info("MST fit: n=%d d=%d, selection eps=%.6g, %d measurements at (%.6g, %.3g) each",
                train.n, d, eps_select, measured_count, eps_measure, delta_measure)

    def measure(table: Table, attrs: tuple[int, ...], label: str) -> MarginalTable:
        counts = marginal(table, attrs).counts
        if spec.is_infinite:
            noisy = counts
        else:
            noisy = gaussian_mechanism(counts, COUNT_SENSITIVITY.l2, eps_measure, delta_measure, rng)
        ledger.spend(label, eps_measure, delta_measure)
        return MarginalTable(attrs, noisy)

    with private_access(train) as data:
        names = data.table.schema.names
        oneways = [measure(data.table, (i,), f"mst:measure[{names[i]}]") for i in range(d)]
        edges = mst_select(data, eps_select, oneways, rng, ledger)
        twoways = {e: measure(data.table, e, f"mst:measure[{names[e[0]]},{names[e[1]]}]") for e in edges}

    tree = fit_tree(TreeModel(oneways, edges, twoways))
    return MSTModel(train.schema, ledger, tree).finish_fit()


mst_sample = MSTModel.sample
