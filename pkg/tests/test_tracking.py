import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vardro.errors import InvalidBudgetError, NonFiniteLossError
from vardro.tracking import (
    SampleStats,
    SampleStatsStore,
    assign_budgets,
    ema_update,
    normalize_variances,
)


class TestEmaUpdate:
    def test_single_step_from_zero(self):
        stats = SampleStats(mean=0.0, variance=0.0, observed=True)
        out = ema_update(stats, 1.0, 0.05)
        assert out.mean == pytest.approx(0.05)
        assert out.variance == pytest.approx(0.05)

    def test_constant_stream_is_fixed_point(self):
        stats = SampleStats(mean=3.5, variance=0.0, observed=True)
        for alpha in (0.05, 0.5, 0.99):
            out = ema_update(stats, 3.5, alpha)
            assert out.mean == 3.5
            assert out.variance == 0.0

    def test_first_observation_initializes(self):
        out = ema_update(SampleStats(), 3.7, 0.05)
        assert out == SampleStats(mean=3.7, variance=0.0, observed=True)

    def test_uses_pre_update_mean_for_variance(self):
        # v' = (1-a)v + a*(loss - mu_old)^2, not the post-update mean.
        stats = SampleStats(mean=1.0, variance=0.2, observed=True)
        out = ema_update(stats, 2.0, 0.1)
        assert out.variance == pytest.approx(0.9 * 0.2 + 0.1 * 1.0**2)

    def test_rejects_nonfinite_loss(self):
        with pytest.raises(NonFiniteLossError):
            ema_update(SampleStats(), float("nan"), 0.05)

    def test_rejects_bad_alpha(self):
        for alpha in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                ema_update(SampleStats(), 1.0, alpha)


class TestStore:
    def test_fresh_batch_has_zero_variances(self):
        store = SampleStatsStore(alpha=0.05)
        snap = store.observe_batch(np.array([0, 1, 2]), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_array_equal(snap, [0.0, 0.0, 0.0])

    def test_repeated_identical_losses_stay_zero(self):
        store = SampleStatsStore(alpha=0.05)
        store.observe_batch(np.array([0, 1, 2]), np.array([1.0, 2.0, 3.0]))
        snap = store.observe_batch(np.array([0, 1, 2]), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_array_equal(snap, [0.0, 0.0, 0.0])

    def test_step_change_produces_variance(self):
        store = SampleStatsStore(alpha=0.05)
        store.observe_batch(np.array([7]), np.array([0.0]))
        snap = store.observe_batch(np.array([7]), np.array([1.0]))
        assert snap[0] == pytest.approx(0.05)

    def test_duplicate_ids_rejected(self):
        store = SampleStatsStore()
        with pytest.raises(ValueError, match="duplicate"):
            store.observe_batch(np.array([3, 3]), np.array([1.0, 2.0]))

    def test_negative_ids_rejected(self):
        store = SampleStatsStore()
        with pytest.raises(ValueError):
            store.observe_batch(np.array([-1, 2]), np.array([1.0, 2.0]))

    def test_length_mismatch_rejected(self):
        store = SampleStatsStore()
        with pytest.raises(ValueError):
            store.observe_batch(np.array([1, 2]), np.array([1.0]))

    def test_json_round_trip(self):
        store = SampleStatsStore(alpha=0.1)
        rng = np.random.default_rng(0)
        for _ in range(5):
            store.observe_batch(np.arange(8), rng.standard_normal(8))
        payload = store.to_json()
        assert set(payload) == {"alpha", "stats"}
        clone = SampleStatsStore.from_json(payload)
        assert clone.alpha == store.alpha
        for i in range(8):
            assert clone.get(i) == store.get(i)

    def test_identical_histories_bit_identical(self):
        losses = np.random.default_rng(42).standard_normal((10, 6))
        stores = []
        for _ in range(2):
            store = SampleStatsStore(alpha=0.05)
            for row in losses:
                store.observe_batch(np.arange(6), row)
            stores.append(store)
        assert stores[0].to_json() == stores[1].to_json()


class TestNormalize:
    def test_all_equal_maps_to_zero(self):
        np.testing.assert_array_equal(normalize_variances([0.2, 0.2, 0.2]), [0.0, 0.0, 0.0])

    def test_two_point_spread(self):
        out = normalize_variances([0.0, 1.0], guard=1e-8)
        assert out[0] == 0.0
        assert out[1] == pytest.approx(1.0 / (1.0 + 1e-8))

    def test_three_point_spread(self):
        out = normalize_variances([0.0, 0.5, 1.0], guard=1e-8)
        np.testing.assert_allclose(out, [0.0, 0.5, 1.0], atol=1e-7)

    def test_rejects_negative_variance(self):
        with pytest.raises(ValueError):
            normalize_variances([0.1, -0.2])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            normalize_variances([])

    @given(
        st.lists(
            st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
            min_size=1,
            max_size=16,
        ),
        st.floats(min_value=-100.0, max_value=100.0, allow_nan=False),
    )
    @settings(max_examples=150, deadline=None)
    def test_range_and_shift_invariance(self, values, offset):
        v = np.array(values)
        out = normalize_variances(v)
        assert np.all(out >= 0.0) and np.all(out < 1.0)
        shifted = v + max(offset, -v.min())  # keep inputs nonnegative
        np.testing.assert_allclose(normalize_variances(shifted), out, atol=1e-9)


class TestAssignBudgets:
    def test_endpoints(self):
        out = assign_budgets(np.array([0.0, 1.0]), 0.01, 0.21)
        assert out[0] == pytest.approx(0.01)
        assert out[1] == pytest.approx(0.21)

    def test_midpoint(self):
        out = assign_budgets(np.array([0.5]), 0.01, 0.21)
        assert out[0] == pytest.approx(0.11)

    def test_rejects_nonpositive_eps_min(self):
        with pytest.raises(InvalidBudgetError):
            assign_budgets(np.array([0.5]), 0.0, 0.2)

    def test_rejects_cap_below_min(self):
        with pytest.raises(InvalidBudgetError):
            assign_budgets(np.array([0.5]), 0.2, 0.1)

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=1, max_size=12),
        st.floats(min_value=1e-4, max_value=0.5, allow_nan=False),
        st.floats(min_value=0.0, max_value=2.0, allow_nan=False),
    )
    @settings(max_examples=150, deadline=None)
    def test_monotone_affine_within_bounds(self, vbar, eps_min, extra):
        eps_cap = eps_min + extra
        arr = np.array(vbar)
        out = assign_budgets(arr, eps_min, eps_cap)
        assert np.all(out >= eps_min - 1e-15)
        assert np.all(out <= eps_cap + 1e-15)
        order = np.argsort(arr)
        assert np.all(np.diff(out[order]) >= -1e-15)


class TestMeanHull:
    @given(
        st.lists(
            st.floats(min_value=-50.0, max_value=50.0, allow_nan=False),
            min_size=1,
            max_size=30,
        ),
        st.floats(min_value=0.01, max_value=0.99, allow_nan=False),
    )
    @settings(max_examples=100, deadline=None)
    def test_mean_stays_in_observed_hull(self, losses, alpha):
        stats = SampleStats()
        for loss in losses:
            stats = ema_update(stats, loss, alpha)
            assert stats.variance >= 0.0
        assert min(losses) - 1e-9 <= stats.mean <= max(losses) + 1e-9
