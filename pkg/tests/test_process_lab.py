"""Tests for processes, selection rules and Monte-Carlo oracles."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chainmi.core.exceptions import EmptyRealization, InvalidProcessSpec, OutOfRange
from chainmi.models.information import PsiEnvelope
from chainmi.models.process import CanonicalProcessSpec, SelectionRule
from chainmi.services import bound_engine
from chainmi.services.info_theory import plug_in_mi_labels
from chainmi.services.process_lab import (
    MonteCarloRunner,
    Statistic,
    argmax_phase,
    circle_cmi_series,
    circle_mi_cap,
    circle_mi_level,
    circle_reference,
    mc_estimate,
    quantized_selector_mi,
    sample_process,
    select,
    simulate_circle_cells,
    statistic_batch,
    summarize,
    two_block_mi_cap,
    variance_proxy,
)

SQRT_HALF_PI = math.sqrt(math.pi / 2)


class TestSampleProcess:
    """Tests for sample_process."""

    def test_zero_point(self):
        """Test the origin gives identically zero values."""
        values = sample_process(CanonicalProcessSpec.finite([[0.0, 0.0]]), seed=1, count=50)
        assert values.shape == (50, 1)
        assert np.all(values == 0.0)

    def test_antipodal_pair(self):
        """Test X_t = -X_(-t) sample by sample."""
        values = sample_process(CanonicalProcessSpec.finite([[1.0, 2.0], [-1.0, -2.0]]), seed=2, count=100)
        assert np.array_equal(values[:, 0], -values[:, 1])

    def test_deterministic(self):
        """Test identical seeds give identical draws."""
        spec = CanonicalProcessSpec.independent(3)
        assert np.array_equal(sample_process(spec, 9, 20), sample_process(spec, 9, 20))
        assert not np.array_equal(sample_process(spec, 9, 20), sample_process(spec, 10, 20))

    def test_increment_variance(self):
        """Test Var(X_t - X_s) = ||t - s||^2."""
        values = sample_process(CanonicalProcessSpec.finite([[1.0, 0.0], [0.0, 1.0]]), seed=3, count=100_000)
        increments = values[:, 0] - values[:, 1]
        variance = increments.var(ddof=1)
        stderr = variance * math.sqrt(2.0 / (increments.size - 1))
        assert abs(variance - 2.0) <= 4 * stderr

    def test_variance_proxy(self):
        """Test max ||t||^2."""
        assert variance_proxy(CanonicalProcessSpec.finite([[1.0, 0.0], [0.0, 2.0]])) == 4.0
        assert variance_proxy(CanonicalProcessSpec.circle()) == 1.0


class TestSelect:
    """Tests for selection rules."""

    def test_circle_phase_zero(self):
        """Test G = (0, 1) with the noiseless atom."""
        assert select(SelectionRule.noisy_circle_argmax(1.0), [0.0, 1.0]) == 0.0

    def test_circle_quarter_turn(self):
        """Test G = (1, 0) has argmax phase pi / 2."""
        assert argmax_phase(np.array([1.0, 0.0]))[0] == pytest.approx(math.pi / 2)

    def test_argmax_ties_to_lowest(self):
        """Test ties break to the lowest index."""
        assert select(SelectionRule.argmax(), [1.0, 3.0, 3.0]) == 1

    def test_two_block_inner(self):
        """Test delta = 0 always stays in the first block."""
        rule = SelectionRule.two_block(10, 3, 0.0)
        rng = np.random.default_rng(0)
        for seed in range(50):
            assert select(rule, rng.standard_normal(10), seed=seed) in (0, 1, 2)

    def test_two_block_outer(self):
        """Test delta = 1 always leaves the first block."""
        rule = SelectionRule.two_block(10, 3, 1.0)
        realization = np.arange(10.0)[::-1]
        assert select(rule, realization) == 3

    def test_empty(self):
        """Test an empty realization."""
        with pytest.raises(EmptyRealization):
            select(SelectionRule.argmax(), [])

    def test_custom_table_rows(self):
        """Test custom tables must be row-stochastic."""
        with pytest.raises(InvalidProcessSpec):
            SelectionRule.custom([[0.5, 0.6], [1.0, 0.0]])

    @given(st.floats(-10, 10), st.floats(-10, 10))
    def test_argmax_phase_maximizes(self, g1, g2):
        """Test the analytic phase attains |G|."""
        gaussians = np.array([[g1, g2]])
        phase = argmax_phase(gaussians)[0]
        assert 0.0 <= phase < 2 * math.pi
        value = g1 * math.sin(phase) + g2 * math.cos(phase)
        assert value == pytest.approx(math.hypot(g1, g2), abs=1e-9)


class TestCircleFormulas:
    """Tests for the noisy circle closed forms."""

    @pytest.mark.parametrize("k", [-1, 0, 3, 10])
    def test_no_atom(self, k):
        """Test eps = 0 gives zero information."""
        assert circle_mi_level(0.0, k) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("k", [-1, 0, 3, 10])
    def test_noiseless(self, k):
        """Test eps = 1 gives log 2^(k+2)."""
        assert circle_mi_level(1.0, k) == pytest.approx((k + 2) * math.log(2))

    def test_small_epsilon(self):
        """Test eps = 1/100, k = 3 lies strictly inside (0, 5 log 2)."""
        value = circle_mi_level(0.01, 3)
        assert 0.0 < value < 5 * math.log(2)

    @given(st.floats(0.0, 1.0), st.integers(-1, 30))
    def test_nondecreasing_in_k(self, epsilon, k):
        """Test refinement never lowers the information."""
        assert circle_mi_level(epsilon, k) <= circle_mi_level(epsilon, k + 1) + 1e-12

    @given(st.floats(0.0, 1.0), st.integers(-1, 30))
    def test_below_cap(self, epsilon, k):
        """Test the linear cap eps (k + 2) log 2."""
        assert circle_mi_level(epsilon, k) <= circle_mi_cap(epsilon).value(k) + 1e-12

    def test_out_of_range(self):
        """Test invalid epsilon and level."""
        with pytest.raises(OutOfRange):
            circle_mi_level(1.5, 0)
        with pytest.raises(OutOfRange):
            circle_mi_level(0.5, -2)

    def test_series_shape(self):
        """Test the series starts at k = -1 and carries the cap."""
        series = circle_cmi_series(0.05, k_max=5)
        assert series.k_start == -1
        assert series.k_end == 5
        assert series.cap.slope == pytest.approx(0.05 * math.log(2))

    def test_reference(self):
        """Test the true bias and the expected supremum."""
        bias, sup = circle_reference(0.0)
        assert bias == 0.0
        assert sup == pytest.approx(1.2533, abs=1e-4)
        assert circle_reference(1 / 20)[0] == pytest.approx(0.0626, abs=1e-4)
        bias, sup = circle_reference(1.0)
        assert bias == pytest.approx(sup)

    @pytest.mark.slow
    def test_plug_in_cross_check(self):
        """Test the closed form against plug-in MI of simulated cells."""
        w_cells, x_cells = simulate_circle_cells(0.5, 1, 200_000, seed=4)
        assert plug_in_mi_labels(w_cells, x_cells) == pytest.approx(circle_mi_level(0.5, 1), abs=0.01)

    @pytest.mark.slow
    def test_spiked_cell_law(self):
        """Test P([W]_k = [argmax]_k) = eps + (1 - eps) / m."""
        epsilon, k = 0.2, 2
        w_cells, x_cells = simulate_circle_cells(epsilon, k, 200_000, seed=5)
        hit = np.mean(w_cells == x_cells)
        expected = epsilon + (1 - epsilon) / 2 ** (k + 2)
        stderr = math.sqrt(expected * (1 - expected) / w_cells.size)
        assert abs(hit - expected) <= 4 * stderr


class TestTwoBlock:
    """Tests for two_block_mi_cap."""

    def test_no_flip(self):
        """Test delta = 0 gives log m."""
        assert two_block_mi_cap(100, 7, 0.0) == pytest.approx(math.log(7))

    def test_always_flip(self):
        """Test delta = 1 gives log(n - m)."""
        assert two_block_mi_cap(100, 7, 1.0) == pytest.approx(math.log(93))

    def test_value(self):
        """Test n = 1024, m = 10, delta = 0.01."""
        assert two_block_mi_cap(1024, 10, 0.01) == pytest.approx(2.405, abs=1e-3)

    def test_out_of_range(self):
        """Test m must lie below n."""
        with pytest.raises(OutOfRange):
            two_block_mi_cap(10, 10, 0.1)


class TestMonteCarloRunner:
    """Tests for MonteCarloRunner."""

    def test_batch_sizes(self):
        """Test full batches then the remainder."""
        assert MonteCarloRunner(25_000, 0).batch_sizes() == [10_000, 10_000, 5_000]

    def test_workers_do_not_change_results(self):
        """Test threaded batches give the same estimate."""
        batch = statistic_batch(CanonicalProcessSpec.independent(4), SelectionRule.argmax(), Statistic.selected_mean())
        single = MonteCarloRunner(30_000, 7, workers=1).estimate(batch)
        threaded = MonteCarloRunner(30_000, 7, workers=3).estimate(batch)
        assert single == threaded

    def test_merged_moments_match_direct(self):
        """Test the batch merge against the mean and stderr of all values."""
        runner = MonteCarloRunner(25_000, 3)
        batch = statistic_batch(CanonicalProcessSpec.independent(2), SelectionRule.argmax(), Statistic.sup_mean())
        merged = runner.estimate(batch)
        direct = summarize(np.concatenate(list(runner.stream(batch))))
        assert merged.estimate == pytest.approx(direct.estimate, abs=1e-12)
        assert merged.stderr == pytest.approx(direct.stderr, rel=1e-9)


class TestMCEstimate:
    """Tests for Monte-Carlo oracles."""

    def test_independent_selector(self):
        """Test E[X_W] = 0 when W ignores the realization."""
        spec = CanonicalProcessSpec.independent(5)
        estimate = mc_estimate(spec, SelectionRule.independent(5), Statistic.selected_mean(), 20_000, seed=1)
        assert estimate.within(0.0, 4.0)

    def test_argmax_equals_sup(self):
        """Test the argmax selector attains the supremum."""
        spec = CanonicalProcessSpec.independent(4)
        selected = mc_estimate(spec, SelectionRule.argmax(), Statistic.selected_mean(), 5_000, seed=2)
        sup = mc_estimate(spec, SelectionRule.argmax(), Statistic.sup_mean(), 5_000, seed=2)
        assert selected.estimate == pytest.approx(sup.estimate)

    def test_too_few_samples(self):
        """Test the sample floor."""
        with pytest.raises(OutOfRange):
            mc_estimate(CanonicalProcessSpec.independent(2), SelectionRule.argmax(), Statistic.sup_mean(), 10, seed=0)

    def test_circle_needs_noisy_rule(self):
        """Test the circle process with a finite selector."""
        with pytest.raises(InvalidProcessSpec):
            statistic_batch(CanonicalProcessSpec.circle(), SelectionRule.argmax(), Statistic.selected_mean())

    def test_quantized_selector_argmax(self):
        """Test I(W; X) = H(Q) for the plain argmax over independent values."""
        spec = CanonicalProcessSpec.independent(4)
        assert quantized_selector_mi(spec, SelectionRule.argmax(), 40_000, seed=3) == pytest.approx(
            math.log(4), abs=1e-2
        )

    @pytest.mark.slow
    def test_circle_bias(self):
        """Test E[X_W] = eps sqrt(pi / 2) for eps = 1/20."""
        estimate = mc_estimate(
            CanonicalProcessSpec.circle(),
            SelectionRule.noisy_circle_argmax(1 / 20),
            Statistic.selected_mean(),
            1_000_000,
            seed=0,
        )
        assert estimate.within(SQRT_HALF_PI / 20, 4.0)

    @pytest.mark.slow
    def test_circle_sup(self):
        """Test the Rayleigh mean sqrt(pi / 2)."""
        estimate = mc_estimate(
            CanonicalProcessSpec.circle(),
            SelectionRule.noisy_circle_argmax(0.0),
            Statistic.sup_mean(),
            1_000_000,
            seed=0,
        )
        assert estimate.within(SQRT_HALF_PI, 4.0)

    @pytest.mark.slow
    def test_circle_below_chained_bound(self):
        """Test the simulated bias stays below the chained bound."""
        epsilon = 1 / 30
        estimate = mc_estimate(
            CanonicalProcessSpec.circle(),
            SelectionRule.noisy_circle_argmax(epsilon),
            Statistic.selected_mean(),
            200_000,
            seed=6,
        )
        bound = bound_engine.chained_bound(PsiEnvelope.subgaussian(1.0), circle_cmi_series(epsilon))
        assert estimate.at_most(bound.bound_value)

    @pytest.mark.slow
    def test_two_block_below_cap(self):
        """Test E[X_W] <= sqrt(2 H(W)) for the two-block selector."""
        n, m, delta = 1024, 10, 0.01
        estimate = mc_estimate(
            CanonicalProcessSpec.independent(n),
            SelectionRule.two_block(n, m, delta),
            Statistic.selected_mean(),
            100_000,
            seed=8,
        )
        assert estimate.at_most(math.sqrt(2 * two_block_mi_cap(n, m, delta)))

    @pytest.mark.slow
    def test_circle_tail_frequency(self):
        """Test the selected tail frequency at level 3 against the tail bound."""
        epsilon, level, x = 1 / 20, 3, 1.0
        mi = circle_mi_level(epsilon, level)
        u = x * x / 2
        result = bound_engine.tail_bound(PsiEnvelope.subgaussian(1.0), "selected", 2 ** (level + 2), u, mi)
        estimate = mc_estimate(
            CanonicalProcessSpec.circle(),
            SelectionRule.noisy_circle_argmax(epsilon),
            Statistic.tail_freq(result.additive_threshold, level),
            100_000,
            seed=9,
        )
        assert estimate.at_most(result.probability)

    @pytest.mark.slow
    def test_random_finite_selectors(self):
        """Test random finite processes and noisy argmax selectors against the MI and tail bounds."""
        rng = np.random.default_rng(33)
        for case in range(20):
            size, dim = int(rng.integers(2, 33)), int(rng.integers(1, 9))
            spec = CanonicalProcessSpec.finite(rng.normal(size=(size, dim)))
            # keep the argmax with probability 1/2, otherwise draw a random index
            table = 0.5 * np.eye(size) + 0.5 * rng.dirichlet(np.full(size, 0.5), size=size)
            rule = SelectionRule.custom(table / table.sum(axis=1, keepdims=True))
            env = PsiEnvelope.subgaussian(variance_proxy(spec))
            mi = quantized_selector_mi(spec, rule, 100_000, seed=case)

            mean = mc_estimate(spec, rule, Statistic.selected_mean(), 50_000, seed=100 + case)
            assert mean.at_most(bound_engine.mi_bound(env, mi)), case

            u = 1.0 / (2.0 * env.sigma2)
            tail = bound_engine.tail_bound(env, "selected", size, u, mi)
            frequency = mc_estimate(spec, rule, Statistic.tail_freq(tail.additive_threshold), 50_000, seed=200 + case)
            assert frequency.at_most(tail.probability), case
