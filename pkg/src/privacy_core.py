import logging, math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from src.config import config
from src.errors import BudgetError, BudgetExhaustedError, CalibrationError, InputError

logger = logging.getLogger(__name__)

# Renyi orders for the sampled Gaussian accountant
RDP_ORDERS: tuple[float, ...] = (1.25, 1.5) + tuple(float(a) for a in range(2, config.rdp_max_order + 1))


@dataclass(frozen=True)
class PrivacySpec:
    """Target (epsilon, delta). epsilon = inf switches every mechanism to noise bypass."""
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if math.isnan(self.epsilon) or self.epsilon <= 0:
            raise BudgetError(f"epsilon must be positive or inf, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise BudgetError(f"delta must lie in [0, 1), got {self.delta}")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.epsilon)

    def scaled(self, fraction: float) -> "PrivacySpec":
        """Share of the budget; delta is scaled by the same fraction."""
        return PrivacySpec(self.epsilon * fraction, self.delta * fraction)

    def __str__(self) -> str:
        eps = "inf" if self.is_infinite else f"{self.epsilon:g}"
        return f"(eps={eps}, delta={self.delta:g})"


@dataclass(frozen=True)
class SensitivityBound:
    l1: float
    l2: float

    def __post_init__(self):
        if self.l1 < 0 or self.l2 < 0:
            raise InputError("sensitivities must be non-negative")
        if self.l2 > self.l1:
            raise InputError(f"l2 sensitivity {self.l2} exceeds l1 sensitivity {self.l1}")


COUNT_SENSITIVITY = SensitivityBound(l1=1.0, l2=1.0)


@dataclass(frozen=True)
class LedgerEntry:
    label: str
    epsilon_spent: float
    delta_spent: float


@dataclass
class BudgetLedger:
    """Append-only record of every mechanism invocation of one fit run."""
    total: PrivacySpec
    entries: list[LedgerEntry] = field(default_factory=list)

    @property
    def epsilon_spent(self) -> float:
        return math.fsum(e.epsilon_spent for e in self.entries)

    @property
    def delta_spent(self) -> float:
        return math.fsum(e.delta_spent for e in self.entries)

    @property
    def epsilon_remaining(self) -> float:
        return self.total.epsilon - self.epsilon_spent

    def spend(self, label: str, epsilon: float, delta: float = 0.0) -> "BudgetLedger":
        if epsilon < 0 or delta < 0 or math.isnan(epsilon) or math.isnan(delta):
            raise BudgetError(f"{label}: spends must be non-negative (eps={epsilon}, delta={delta})")

        if not self.total.is_infinite:
            new_eps = self.epsilon_spent + epsilon
            if new_eps > self.total.epsilon * (1 + config.ledger_tolerance):
                raise BudgetExhaustedError(
                    label, f"epsilon {new_eps:.6g} would exceed total {self.total.epsilon:.6g}")
        new_delta = self.delta_spent + delta
        if new_delta > self.total.delta * (1 + config.ledger_tolerance):
            raise BudgetExhaustedError(
                label, f"delta {new_delta:.6g} would exceed total {self.total.delta:.6g}")

        self.entries.append(LedgerEntry(label, epsilon, delta))
        logger.debug("Ledger spend %s: eps=%.6g delta=%.3g (total eps=%.6g)", label, epsilon, delta, self.epsilon_spent)
        return self

    def assert_within_budget(self) -> None:
        """Conservation check run at the end of every fit."""
        slack = 1 + config.ledger_tolerance
        if not self.total.is_infinite and self.epsilon_spent > self.total.epsilon * slack:
            raise BudgetExhaustedError("ledger", f"spent epsilon {self.epsilon_spent} > {self.total.epsilon}")
        if self.delta_spent > self.total.delta * slack:
            raise BudgetExhaustedError("ledger", f"spent delta {self.delta_spent} > {self.total.delta}")


def ledger_spend(ledger: BudgetLedger, label: str, eps: float, delta: float = 0.0) -> BudgetLedger:
    return ledger.spend(label, eps, delta)


def _check_epsilon(epsilon: float) -> None:
    if math.isnan(epsilon) or epsilon <= 0:
        raise BudgetError(f"epsilon must be positive or inf, got {epsilon}")


def _as_finite_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError("mechanism input contains non-finite values")
    return arr


def laplace_mechanism(values, sensitivity: float, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. Laplace(0, sensitivity/epsilon) noise; identity at epsilon = inf."""
    _check_epsilon(epsilon)
    if sensitivity <= 0:
        raise InputError(f"sensitivity must be positive, got {sensitivity}")
    arr = _as_finite_vector(values)
    if math.isinf(epsilon):
        return arr.copy()
    return arr + rng.laplace(0.0, sensitivity / epsilon, size=arr.shape)


def gaussian_sigma(sensitivity: float, epsilon: float, delta: float) -> float:
    """Classical Gaussian mechanism calibration sigma = sensitivity * sqrt(2 ln(1.25/delta)) / epsilon."""
    _check_epsilon(epsilon)
    if not 0 < delta < 1:
        raise BudgetError(f"Gaussian mechanism needs 0 < delta < 1 (got {delta}); use Laplace for pure DP")
    if math.isinf(epsilon):
        return 0.0
    return sensitivity * math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon


def gaussian_mechanism(values, sensitivity: float, epsilon: float, delta: float,
                       rng: np.random.Generator) -> np.ndarray:
    _check_epsilon(epsilon)
    if sensitivity <= 0:
        raise InputError(f"sensitivity must be positive, got {sensitivity}")
    arr = _as_finite_vector(values)
    if math.isinf(epsilon):
        return arr.copy()
    sigma = gaussian_sigma(sensitivity, epsilon, delta)
    return arr + rng.normal(0.0, sigma, size=arr.shape)


def exponential_mechanism(scores, sensitivity: float, epsilon: float, rng: np.random.Generator) -> int:
    """Pick index i with probability proportional to exp(epsilon * score_i / (2 * sensitivity)).

    At epsilon = inf the argmax is returned, ties resolved to the lowest index.
    """
    _check_epsilon(epsilon)
    q = np.asarray(scores, dtype=float).ravel()
    if q.size == 0:
        raise InputError("exponential mechanism needs at least one candidate")
    if not np.all(np.isfinite(q)):
        raise InputError("exponential mechanism scores must be finite")
    if sensitivity <= 0:
        raise InputError(f"sensitivity must be positive, got {sensitivity}")
    if math.isinf(epsilon):
        return int(np.argmax(q))
    logits = epsilon * q / (2.0 * sensitivity)
    probas = np.exp(logits - special.logsumexp(logits))
    return int(rng.choice(q.size, p=probas / probas.sum()))


# --- Renyi DP accountant for the sampled Gaussian mechanism ---

def _log_add(logx: float, logy: float) -> float:
    a, b = min(logx, logy), max(logx, logy)
    if a == -np.inf:
        return b
    return math.log1p(math.exp(a - b)) + b


def _log_a_int(q: float, sigma: float, alpha: int) -> float:
    log_a = -np.inf
    for i in range(alpha + 1):
        log_coef = (math.log(special.binom(alpha, i)) + i * math.log(q)
                    + (alpha - i) * math.log(1 - q))
        log_a = _log_add(log_a, log_coef + (i * i - i) / (2 * sigma ** 2))
    return float(log_a)


def _rdp_single_step(q: float, sigma: float, alpha: float) -> float:
    if q == 0:
        return 0.0
    if q == 1.0:
        return alpha / (2 * sigma ** 2)
    if not float(alpha).is_integer():
        # Renyi divergence is non-decreasing in the order
        alpha = math.ceil(alpha)
    return _log_a_int(q, sigma, int(alpha)) / (alpha - 1)


def sgd_accountant_epsilon(noise_multiplier: float, sampling_rate: float, steps: int, delta: float) -> float:
    """Epsilon of `steps` compositions of the subsampled Gaussian, via RDP."""
    if noise_multiplier <= 0:
        raise InputError(f"noise multiplier must be positive, got {noise_multiplier}")
    if not 0 < sampling_rate <= 1:
        raise InputError(f"sampling rate must lie in (0, 1], got {sampling_rate}")
    if steps < 0:
        raise InputError(f"steps must be non-negative, got {steps}")
    if not 0 < delta < 1:
        raise BudgetError(f"accountant needs 0 < delta < 1, got {delta}")
    if steps == 0:
        return 0.0

    log_inv_delta = math.log(1 / delta)
    best = math.inf
    for alpha in RDP_ORDERS:
        rdp = steps * _rdp_single_step(sampling_rate, noise_multiplier, alpha)
        best = min(best, rdp + log_inv_delta / (alpha - 1))
    return max(best, 0.0)


def calibrate_noise_multiplier(target: PrivacySpec, sampling_rate: float, steps: int) -> float:
    """Smallest noise multiplier (within tolerance) whose accounted epsilon stays within target."""
    if target.is_infinite:
        raise InputError("calibration needs a finite target epsilon")

    def eps_at(sigma: float) -> float:
        return sgd_accountant_epsilon(sigma, sampling_rate, steps, target.delta)

    lo = config.calibration_min_sigma
    if eps_at(lo) <= target.epsilon:
        return lo

    hi = max(2 * lo, 1.0)
    while eps_at(hi) > target.epsilon:
        if hi >= config.calibration_max_sigma:
            raise CalibrationError(
                f"no noise multiplier <= {config.calibration_max_sigma:g} reaches eps={target.epsilon:g} "
                f"(q={sampling_rate:.4g}, steps={steps})")
        lo = hi
        hi = min(hi * 2, config.calibration_max_sigma)

    while hi - lo > config.calibration_tolerance:
        mid = 0.5 * (lo + hi)
        if eps_at(mid) <= target.epsilon:
            hi = mid
        else:
            lo = mid

    logger.debug("Calibrated noise multiplier %.4f for eps=%g q=%.4g steps=%d", hi, target.epsilon, sampling_rate, steps)
    return hi


def pate_accountant_epsilon(query_count: int, per_query_epsilon: float, delta: float) -> float:
    """Strong-composition bound for `query_count` pure-DP vote aggregations."""
    if per_query_epsilon <= 0:
        raise InputError(f"per-query epsilon must be positive, got {per_query_epsilon}")
    if query_count < 0:
        raise InputError(f"query count must be non-negative, got {query_count}")
    if query_count == 0:
        return 0.0
    if not 0 < delta < 1:
        raise BudgetError(f"strong composition needs 0 < delta < 1, got {delta}")
    e0 = per_query_epsilon
    return e0 * math.sqrt(2 * query_count * math.log(1 / delta)) + query_count * e0 * math.expm1(e0)


def calibrate_per_query_epsilon(target: PrivacySpec, query_count: int) -> float:
    """Largest per-query epsilon such that `query_count` queries fit the target."""
    if target.is_infinite:
        return math.inf
    if query_count <= 0:
        raise InputError("planned query count must be positive")
    lo, hi = 0.0, target.epsilon
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mid > 0 and pate_accountant_epsilon(query_count, mid, target.delta) <= target.epsilon:
            lo = mid
        else:
            hi = mid
    if lo <= 0:
        raise CalibrationError(f"no per-query epsilon fits {query_count} queries in eps={target.epsilon:g}")
    return lo


def spawn_rngs(seed: int | np.random.SeedSequence, count: int) -> list[np.random.Generator]:
    """Independent child streams of one seed."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in seq.spawn(count)]
