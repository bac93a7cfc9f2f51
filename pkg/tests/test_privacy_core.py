import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.errors import BudgetError, BudgetExhaustedError, CalibrationError, InputError
from src.privacy_core import (RDP_ORDERS, BudgetLedger, LedgerEntry, PrivacySpec, calibrate_noise_multiplier,
                              calibrate_per_query_epsilon, exponential_mechanism, gaussian_mechanism,
                              gaussian_sigma, laplace_mechanism, ledger_spend, pate_accountant_epsilon,
                              sgd_accountant_epsilon, spawn_rngs)


class TestPrivacySpec:

    @pytest.mark.parametrize("epsilon, delta", [(0.0, 0.0), (-1.0, 0.0), (math.nan, 0.0), (1.0, 1.0), (1.0, -0.1)])
    def test_rejects_invalid(self, epsilon, delta):
        with pytest.raises(BudgetError):
            PrivacySpec(epsilon, delta)

    def test_infinite(self):
        assert PrivacySpec(math.inf).is_infinite
        assert not PrivacySpec(1.0).is_infinite

    def test_scaled(self):
        assert PrivacySpec(2.0, 1e-5).scaled(0.5) == PrivacySpec(1.0, 5e-6)


class TestBudgetLedger:

    def test_spend_accumulates(self):
        ledger = BudgetLedger(PrivacySpec(1.0, 1e-5))
        ledger.spend("a", 0.25).spend("b", 0.5, 1e-6)
        assert ledger.epsilon_spent == pytest.approx(0.75)
        assert ledger.delta_spent == pytest.approx(1e-6)
        assert ledger.epsilon_remaining == pytest.approx(0.25)
        assert [e.label for e in ledger.entries] == ["a", "b"]

    def test_overrun_names_label(self):
        ledger = BudgetLedger(PrivacySpec(1.0))
        ledger.spend("first", 0.9)
        with pytest.raises(BudgetExhaustedError) as info:
            ledger.spend("second", 0.2)
        assert info.value.label == "second"
        assert len(ledger.entries) == 1

    def test_delta_overrun(self):
        with pytest.raises(BudgetExhaustedError):
            BudgetLedger(PrivacySpec(1.0, 1e-6)).spend("gauss", 0.1, 1e-5)

    def test_ledger_spend_function(self):
        ledger = ledger_spend(BudgetLedger(PrivacySpec(1.0, 1e-5)), "gauss", 0.5, 1e-6)
        assert ledger.entries[0] == LedgerEntry("gauss", 0.5, 1e-6)

    def test_negative_spend(self):
        with pytest.raises(BudgetError):
            BudgetLedger(PrivacySpec(1.0)).spend("neg", -0.1)

    def test_infinite_total_accepts_anything(self):
        ledger = BudgetLedger(PrivacySpec(math.inf))
        ledger.spend("x", 1e6).spend("y", math.inf)
        ledger.assert_within_budget()

    @given(st.floats(min_value=1e-3, max_value=1e3), st.integers(min_value=1, max_value=200))
    def test_equal_split_conserves_budget(self, epsilon, parts):
        ledger = BudgetLedger(PrivacySpec(epsilon))
        for k in range(parts):
            ledger.spend(f"part[{k}]", epsilon / parts)
        ledger.assert_within_budget()
        assert ledger.epsilon_spent == pytest.approx(epsilon, rel=1e-9)


class TestLaplaceMechanism:

    def test_scale_matches_closed_form(self, rng):
        noisy = laplace_mechanism(np.zeros(100_000), 1.0, 0.5, rng)
        # E|Laplace(0, b)| = b
        assert np.mean(np.abs(noisy)) == pytest.approx(2.0, rel=0.02)

    def test_identity_at_infinity(self, rng):
        values = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(laplace_mechanism(values, 1.0, math.inf, rng), values)

    def test_noise_shrinks_as_epsilon_grows(self, rng):
        spreads = [np.mean(np.abs(laplace_mechanism(np.zeros(20_000), 1.0, eps, rng))) for eps in (0.1, 1.0, 10.0)]
        assert spreads[0] > spreads[1] > spreads[2]
        sigmas = [gaussian_sigma(1.0, eps, 1e-5) for eps in (0.01, 0.1, 1.0, 10.0)]
        assert all(a > b for a, b in zip(sigmas, sigmas[1:]))

    @pytest.mark.parametrize("values", [[1.0, math.nan], [math.inf]])
    def test_rejects_non_finite(self, rng, values):
        with pytest.raises(InputError):
            laplace_mechanism(values, 1.0, 1.0, rng)

    def test_rejects_bad_epsilon(self, rng):
        with pytest.raises(BudgetError):
            laplace_mechanism([1.0], 1.0, 0.0, rng)


class TestGaussianMechanism:

    def test_sigma_formula(self):
        expected = math.sqrt(2 * math.log(1.25 / 1e-5))
        assert gaussian_sigma(1.0, 1.0, 1e-5) == pytest.approx(expected)
        assert gaussian_sigma(2.0, 0.5, 1e-5) == pytest.approx(4 * expected)

    def test_empirical_std(self, rng):
        noisy = gaussian_mechanism(np.zeros(100_000), 1.0, 1.0, 1e-5, rng)
        assert np.std(noisy) == pytest.approx(gaussian_sigma(1.0, 1.0, 1e-5), rel=0.01)

    def test_zero_delta_rejected(self):
        with pytest.raises(BudgetError):
            gaussian_sigma(1.0, 1.0, 0.0)

    def test_infinite_epsilon(self, rng):
        assert gaussian_sigma(1.0, math.inf, 1e-5) == 0.0
        assert np.array_equal(gaussian_mechanism([4.0], 1.0, math.inf, 1e-5, rng), [4.0])


class TestExponentialMechanism:

    def test_selection_frequencies(self, rng):
        picks = np.array([exponential_mechanism([0.0, 1.0], 1.0, 2.0, rng) for _ in range(100_000)])
        assert picks.mean() == pytest.approx(math.e / (1 + math.e), abs=0.01)

    def test_argmax_at_infinity_lowest_tie(self, rng):
        assert exponential_mechanism([1.0, 3.0, 3.0], 1.0, math.inf, rng) == 1

    def test_single_candidate(self, rng):
        assert exponential_mechanism([5.0], 1.0, 0.1, rng) == 0

    @pytest.mark.parametrize("epsilon", [0.1, 1.0, 10.0])
    def test_equal_scores_pick_uniformly(self, rng, epsilon):
        picks = np.array([exponential_mechanism([2.0, 2.0, 2.0, 2.0], 1.0, epsilon, rng) for _ in range(40_000)])
        np.testing.assert_allclose(np.bincount(picks, minlength=4) / picks.size, 0.25, atol=0.01)

    @pytest.mark.parametrize("scores", [[], [1.0, math.nan]])
    def test_rejects_bad_scores(self, rng, scores):
        with pytest.raises(InputError):
            exponential_mechanism(scores, 1.0, 1.0, rng)


class TestSgdAccountant:

    def test_zero_steps(self):
        assert sgd_accountant_epsilon(1.0, 0.1, 0, 1e-5) == 0.0

    def test_full_batch_matches_gaussian_rdp(self):
        sigma, steps, delta = 2.0, 10, 1e-5
        expected = min(steps * a / (2 * sigma ** 2) + math.log(1 / delta) / (a - 1) for a in RDP_ORDERS)
        assert sgd_accountant_epsilon(sigma, 1.0, steps, delta) == pytest.approx(expected)

    def test_monotone(self):
        base = sgd_accountant_epsilon(1.0, 0.01, 1000, 1e-5)
        assert sgd_accountant_epsilon(1.0, 0.01, 2000, 1e-5) > base
        assert sgd_accountant_epsilon(2.0, 0.01, 1000, 1e-5) < base
        assert sgd_accountant_epsilon(1.0, 0.02, 1000, 1e-5) > base

    def test_subsampling_amplifies(self):
        assert sgd_accountant_epsilon(1.0, 0.01, 100, 1e-5) < sgd_accountant_epsilon(1.0, 1.0, 100, 1e-5)

    @pytest.mark.parametrize("sigma, q, steps, delta, error", [
        (0.0, 0.1, 10, 1e-5, InputError),
        (1.0, 0.0, 10, 1e-5, InputError),
        (1.0, 1.5, 10, 1e-5, InputError),
        (1.0, 0.1, -1, 1e-5, InputError),
        (1.0, 0.1, 10, 0.0, BudgetError),
    ])
    def test_rejects_invalid(self, sigma, q, steps, delta, error):
        with pytest.raises(error):
            sgd_accountant_epsilon(sigma, q, steps, delta)


class TestCalibrateNoiseMultiplier:

    def test_hits_target_from_above(self):
        target = PrivacySpec(1.0, 1e-5)
        sigma = calibrate_noise_multiplier(target, 0.01, 1000)
        assert sgd_accountant_epsilon(sigma, 0.01, 1000, 1e-5) <= 1.0
        assert sgd_accountant_epsilon(sigma - 0.01, 0.01, 1000, 1e-5) > 1.0

    def test_zero_steps(self):
        assert calibrate_noise_multiplier(PrivacySpec(0.5, 1e-5), 0.1, 0) == pytest.approx(0.01)

    def test_unreachable_target(self):
        # the ln(1/delta)/(alpha-1) term alone exceeds 0.01 for every order
        with pytest.raises(CalibrationError):
            calibrate_noise_multiplier(PrivacySpec(0.01, 1e-5), 0.25, 8)

    def test_infinite_target_rejected(self):
        with pytest.raises(InputError):
            calibrate_noise_multiplier(PrivacySpec(math.inf, 1e-5), 0.1, 10)


class TestPateAccountant:

    def test_closed_form(self):
        e0, k, delta = 0.01, 500, 1e-5
        expected = e0 * math.sqrt(2 * k * math.log(1 / delta)) + k * e0 * math.expm1(e0)
        assert pate_accountant_epsilon(k, e0, delta) == pytest.approx(expected)

    def test_no_queries(self):
        assert pate_accountant_epsilon(0, 0.1, 1e-5) == 0.0

    def test_calibrated_per_query_epsilon_fits(self):
        target = PrivacySpec(1.0, 1e-5)
        e0 = calibrate_per_query_epsilon(target, 10_000)
        assert pate_accountant_epsilon(10_000, e0, 1e-5) <= 1.0
        assert pate_accountant_epsilon(10_000, e0 * 1.01, 1e-5) > 1.0

    def test_calibration_infinite(self):
        assert calibrate_per_query_epsilon(PrivacySpec(math.inf), 10) == math.inf


class TestSpawnRngs:

    def test_streams_are_reproducible_and_distinct(self):
        first = [r.random() for r in spawn_rngs(5, 3)]
        again = [r.random() for r in spawn_rngs(5, 3)]
        assert first == again
        assert len(set(first)) == 3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(min_value=-100, max_value=100), min_size=1, max_size=20),
       st.floats(min_value=0.01, max_value=10))
def test_exponential_mechanism_index_in_range(scores, epsilon):
    index = exponential_mechanism(scores, 1.0, epsilon, np.random.default_rng(0))
    assert 0 <= index < len(scores)
