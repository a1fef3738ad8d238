"""Tests for the bound engine."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainmi.core.exceptions import (
    EmptyCandidates,
    MissingTailCap,
    NegativeValue,
    RangeMismatch,
    TailTooLoose,
    UndefinedAtZero,
)
from chainmi.models.information import PsiEnvelope
from chainmi.models.series import LevelSeries, TailCap
from chainmi.services import bound_engine
from chainmi.services.metric_core import (
    circle_points,
    finest_needed_level,
    log_covering_series,
    restrict,
    space_from_points,
)
from chainmi.services.process_lab import circle_cmi_series

LOG2 = math.log(2)
UNIT = PsiEnvelope.subgaussian(1.0)


def circle_log_cardinality() -> LevelSeries:
    """log 2^(k+2) from k = -1 with its linear cap."""
    values = [(k + 2) * LOG2 for k in range(-1, 11)]
    return LevelSeries.with_cap(-1, values, TailCap(slope=LOG2, intercept=2 * LOG2, kind="log_cardinality"))


class TestLevelSeries:
    """Tests for LevelSeries and TailCap."""

    def test_negative_value(self):
        """Test negative entries name their level."""
        with pytest.raises(NegativeValue) as info:
            LevelSeries.zero_after_last(2, [0.1, -0.5])
        assert info.value.k == 3

    def test_value_at(self):
        """Test supplied, capped and missing levels."""
        series = LevelSeries.with_cap(0, [1.0, 2.0], TailCap(slope=1.0, intercept=0.5))
        assert series.value_at(1) == 2.0
        assert series.value_at(4) == 4.5
        assert series.value_at(-1) == 0.0
        assert LevelSeries.zero_after_last(0, [1.0]).value_at(3) == 0.0

    def test_combine(self):
        """Test the convex combination of two caps."""
        cap = TailCap.combine(0.25, TailCap(4.0, 8.0), TailCap(0.0, 4.0), 1.0)
        assert cap.slope == pytest.approx(1.0)
        assert cap.intercept == pytest.approx(6.0)


class TestScalarBounds:
    """Tests for maximal_bound and mi_bound."""

    def test_maximal_single_point(self):
        """Test log 1 = 0."""
        assert bound_engine.maximal_bound(UNIT, 1) == 0.0

    def test_maximal_eight(self):
        """Test sqrt(2 log 8)."""
        assert bound_engine.maximal_bound(UNIT, 8) == pytest.approx(2.039, abs=1e-3)

    def test_maximal_absolute(self):
        """Test sqrt(2 log 4) for the absolute supremum over two points."""
        assert bound_engine.maximal_bound(UNIT, 2, absolute=True) == pytest.approx(1.665, abs=1e-3)

    def test_mi_zero(self):
        """Test independent W gives zero bias."""
        assert bound_engine.mi_bound(UNIT, 0.0) == 0.0
        assert bound_engine.mi_bound(UNIT, 0.0, "absolute_expectation") == 0.0

    def test_mi_infinite(self):
        """Test infinite information gives an infinite bound."""
        assert math.isinf(bound_engine.mi_bound(UNIT, math.inf))

    def test_mi_expected_absolute(self):
        """Test sqrt(2 (2 + log 2))."""
        assert bound_engine.mi_bound(UNIT, 2.0, "expected_absolute") == pytest.approx(2.321, abs=1e-3)

    def test_mi_scales_with_variance(self):
        """Test sqrt(2 sigma^2 I)."""
        assert bound_engine.mi_bound(PsiEnvelope.subgaussian(4.0), 0.5) == pytest.approx(2.0)

    def test_grid_envelope(self):
        """Test piecewise-linear envelopes from a config grid."""
        grid = PsiEnvelope.from_grid([(i / 2, 0.5 * (i / 2) ** 2) for i in range(21)])
        assert bound_engine.mi_bound(grid, 40.0) == pytest.approx(math.sqrt(80.0), abs=1e-2)
        # log |T| above psi*(9.75) = 47.5 stops at the last slope
        assert bound_engine.maximal_bound(grid, 10**30) == pytest.approx(9.75, abs=1e-6)

    @given(st.floats(0.01, 10.0), st.integers(1, 10**6), st.floats(0.0, 1.0))
    def test_mi_below_maximal(self, sigma2, cardinality, fraction):
        """Test mi <= log |T| gives mi_bound <= maximal_bound."""
        env = PsiEnvelope.subgaussian(sigma2)
        mi = fraction * math.log(cardinality)
        assert bound_engine.mi_bound(env, mi) <= bound_engine.maximal_bound(env, cardinality) + 1e-12


class TestDudleyBound:
    """Tests for dudley_bound."""

    def test_all_zero(self):
        """Test a single ball at every scale."""
        report = bound_engine.dudley_bound(LevelSeries.zero_after_last(0, [0.0, 0.0, 0.0]))
        assert report.bound_value == 0.0

    def test_single_level(self):
        """Test one level k = 0 with log N = 1."""
        report = bound_engine.dudley_bound(LevelSeries.zero_after_last(0, [1.0]))
        assert report.bound_value == pytest.approx(6.0)
        assert report.truncation_k == 0
        assert report.tail_estimate == 0.0

    def test_circle_log_cardinality(self):
        """Test the constant-6 form of the circle chaining sum."""
        report = bound_engine.dudley_bound(circle_log_cardinality())
        assert report.bound_value == pytest.approx(6 / (3 * math.sqrt(2)) * 19.0352, abs=1e-2)

    def test_missing_cap(self):
        """Test analytic-cap mode needs a cap."""
        with pytest.raises(MissingTailCap):
            bound_engine.dudley_bound(LevelSeries(k_start=0, values=(1.0,), tail_mode="analytic_cap"))

    def test_value_is_terms_plus_tail(self):
        """Test the reported value decomposes into its terms and the tail."""
        report = bound_engine.dudley_bound(circle_log_cardinality())
        assert report.bound_value == pytest.approx(report.terms_sum + report.tail_estimate, rel=1e-15)
        assert 0 < report.tail_estimate <= 1e-6


class TestChainedBound:
    """Tests for chained_bound."""

    def test_zero_information(self):
        """Test W independent of the process at every resolution."""
        series = LevelSeries.with_cap(-1, [0.0] * 5, TailCap.constant(0.0))
        assert bound_engine.chained_bound(UNIT, series).bound_value == 0.0

    def test_chaining_constant(self):
        """Test the noiseless circle selector gives the chaining constant."""
        report = bound_engine.chained_bound(UNIT, circle_cmi_series(1.0))
        assert report.bound_value == pytest.approx(19.0352, abs=5e-3)

    def test_log_cardinality_matches_chaining_constant(self):
        """Test log 2^(k+2) is the eps = 1 information series."""
        report = bound_engine.chained_bound(UNIT, circle_log_cardinality())
        assert report.bound_value == pytest.approx(19.0352, abs=5e-3)

    @pytest.mark.parametrize(
        "epsilon, expected",
        [
            (1 / 20, 1.1013),
            (1 / 30, 0.7507),
            (1 / 40, 0.5709),
            (1 / 50, 0.4612),
            (1 / 100, 0.2364),
            (1 / 200, 0.1204),
            (1 / 400, 0.0610),
        ],
    )
    def test_noisy_circle_row(self, epsilon, expected):
        """Test the noisy circle chained bound for each epsilon."""
        report = bound_engine.chained_bound(UNIT, circle_cmi_series(epsilon))
        assert report.bound_value == pytest.approx(expected, abs=1e-3)

    def test_variance_scaling(self):
        """Test the bound scales with sigma."""
        series = circle_cmi_series(0.05)
        base = bound_engine.chained_bound(UNIT, series).bound_value
        scaled = bound_engine.chained_bound(PsiEnvelope.subgaussian(4.0), series).bound_value
        assert scaled == pytest.approx(2 * base, rel=1e-6)

    def test_absolute_variant_larger(self):
        """Test adding log 2 per level."""
        series = LevelSeries.zero_after_last(0, [0.5, 0.25])
        expectation = bound_engine.chained_bound(UNIT, series).bound_value
        absolute = bound_engine.chained_bound(UNIT, series, "absolute")
        assert absolute.bound_value > expectation
        assert absolute.formula_id == "chained_mi_absolute"
        # log 2 persists past the last entry
        assert absolute.truncation_k > series.k_end

    def test_general_envelope(self):
        """Test the numeric psi path sums 3 sqrt(2) 2^-k psi*^-1(I_k)."""
        values = [0.5, 0.3, 0.1]
        general = PsiEnvelope.general(lambda lam: 0.5 * lam * lam)
        report = bound_engine.chained_bound(general, LevelSeries.zero_after_last(0, values))
        expected = 3 * math.sqrt(2) * sum(2.0 ** -k * math.sqrt(2 * value) for k, value in enumerate(values))
        assert report.bound_value == pytest.approx(expected, abs=1e-6)

    def test_tail_too_loose(self):
        """Test a cap that never certifies its remainder hits the iteration cap."""
        series = LevelSeries.with_cap(0, [1.0], TailCap(slope=1.0, intercept=-1e9))
        with pytest.raises(TailTooLoose):
            bound_engine.chained_bound(UNIT, series)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0.0, 5.0), min_size=1, max_size=8), st.floats(0.0, 5.0))
    def test_monotone_in_information(self, values, bump):
        """Test increasing one level never lowers the bound."""
        series = LevelSeries.zero_after_last(0, values)
        bumped = LevelSeries.zero_after_last(0, [values[0] + bump] + values[1:])
        assert bound_engine.chained_bound(UNIT, bumped).bound_value >= bound_engine.chained_bound(UNIT, series).bound_value

    @pytest.mark.parametrize("epsilon", [0.0, 1 / 400, 1 / 20, 0.3, 0.9, 1.0])
    def test_information_below_log_cardinality(self, epsilon):
        """Test I_k <= log |P_k| level-wise and the bounds in the same order."""
        information = circle_cmi_series(epsilon, 12)
        cardinality = circle_log_cardinality()
        for k in range(-1, 40):
            assert information.value_at(k) <= cardinality.value_at(k) + 1e-12
        assert (
            bound_engine.chained_bound(UNIT, information).bound_value
            <= bound_engine.chained_bound(UNIT, cardinality).bound_value + 1e-9
        )


class TestSmallSubsetBound:
    """Tests for small_subset_bound."""

    @pytest.fixture
    def circle(self):
        return space_from_points(circle_points(64))

    def _series(self, space, k_max):
        return log_covering_series(space, 0, k_max)

    def test_alpha_one_is_dudley_on_first(self, circle):
        """Test alpha = 1 ignores T2."""
        k_max = finest_needed_level(circle, 0)
        first = self._series(restrict(circle, range(16)), k_max)
        second = self._series(restrict(circle, range(16, 64)), k_max)
        report = bound_engine.small_subset_bound(1.0, first, second)
        assert report.bound_value == pytest.approx(bound_engine.dudley_bound(first).bound_value, abs=1e-12)

    def test_alpha_zero_is_dudley_on_second(self, circle):
        """Test alpha = 0 ignores T1."""
        k_max = finest_needed_level(circle, 0)
        first = self._series(restrict(circle, range(16)), k_max)
        second = self._series(restrict(circle, range(16, 64)), k_max)
        report = bound_engine.small_subset_bound(0.0, first, second)
        assert report.bound_value == pytest.approx(bound_engine.dudley_bound(second).bound_value, abs=1e-12)

    def test_tiny_subset_beats_dudley(self, circle):
        """Test alpha = 0.99 on a single point against the full space."""
        k_max = finest_needed_level(circle, 0)
        first = self._series(restrict(circle, [0]), k_max)
        second = self._series(restrict(circle, range(1, 64)), k_max)
        full = bound_engine.dudley_bound(self._series(circle, k_max))
        report = bound_engine.small_subset_bound(0.99, first, second)
        assert report.bound_value < full.bound_value

    def test_range_mismatch(self):
        """Test misaligned series."""
        with pytest.raises(RangeMismatch):
            bound_engine.small_subset_bound(
                0.5, LevelSeries.zero_after_last(0, [1.0]), LevelSeries.zero_after_last(1, [1.0])
            )


class TestLipschitzNetBound:
    """Tests for lipschitz_net_bound."""

    def test_single_candidate_without_information(self):
        """Test bound = eps * E[C]."""
        result = bound_engine.lipschitz_net_bound(2.0, UNIT, [(0.25, 0.0)])
        assert result.bound == pytest.approx(0.5)

    def test_zero_lipschitz(self):
        """Test the Lipschitz term vanishes."""
        result = bound_engine.lipschitz_net_bound(0.0, UNIT, [(0.5, 0.8), (0.25, 0.2)])
        assert result.bound == pytest.approx(math.sqrt(0.4))
        assert result.best_scale == 0.25

    def test_two_candidates(self):
        """Test min(0.5 + sqrt(0.4), 0.25 + sqrt(1.6))."""
        result = bound_engine.lipschitz_net_bound(1.0, UNIT, [(0.25, 0.8), (0.5, 0.2)])
        assert result.bound == pytest.approx(1.132, abs=1e-3)
        assert result.best_scale == 0.5

    def test_ties_to_smallest_scale(self):
        """Test equal bounds pick the smaller scale."""
        result = bound_engine.lipschitz_net_bound(0.0, UNIT, [(0.5, 0.3), (0.1, 0.3)])
        assert result.best_scale == 0.1

    def test_empty(self):
        """Test no candidates."""
        with pytest.raises(EmptyCandidates):
            bound_engine.lipschitz_net_bound(1.0, UNIT, [])

    @given(
        st.floats(0.0, 5.0),
        st.floats(0.0, 10.0),
        st.lists(st.tuples(st.floats(0.01, 2.0), st.floats(0.0, 1.0)), min_size=1, max_size=6),
    )
    def test_below_scale_plus_total_information(self, lipschitz, total, candidates):
        """Test I_eps <= I(W; X_T) for all eps gives bound <= min eps E[C] + psi*^-1(I(W; X_T))."""
        pairs = [(scale, fraction * total) for scale, fraction in candidates]
        result = bound_engine.lipschitz_net_bound(lipschitz, UNIT, pairs)
        smallest = min(scale for scale, _ in pairs)
        assert result.bound <= smallest * lipschitz + bound_engine.mi_bound(UNIT, total) + 1e-9


class TestTailBound:
    """Tests for tail_bound."""

    def test_sup_u_zero(self):
        """Test e^0 = 1."""
        result = bound_engine.tail_bound(UNIT, "sup", 4, 0.0)
        assert result.probability == 1.0
        assert result.threshold == pytest.approx(math.sqrt(2 * math.log(4)))

    def test_selected_information_branch(self):
        """Test I = 0, u = log 2, |T| = 2."""
        result = bound_engine.tail_bound(UNIT, "selected", 2, LOG2, mi=0.0)
        assert result.probability == pytest.approx(0.585, abs=1e-3)

    def test_selected_cardinality_branch(self):
        """Test I = 1, u = 10, |T| = 3."""
        result = bound_engine.tail_bound(UNIT, "selected", 3, 10.0, mi=1.0)
        assert result.probability == pytest.approx(3 * math.exp(-11), rel=1e-9)
        assert result.probability == pytest.approx(5.0e-5, rel=1e-2)

    def test_additive_threshold(self):
        """Test sqrt(2 sigma^2 I) + sqrt(2 sigma^2 u) for subgaussian envelopes."""
        result = bound_engine.tail_bound(UNIT, "selected", 8, 2.0, mi=0.5)
        assert result.additive_threshold == pytest.approx(1.0 + 2.0)
        assert result.threshold == pytest.approx(math.sqrt(5.0))

    def test_undefined_at_zero(self):
        """Test I = u = 0."""
        with pytest.raises(UndefinedAtZero):
            bound_engine.tail_bound(UNIT, "selected", 2, 0.0, mi=0.0)

    @given(st.floats(0.0, 20.0), st.floats(0.01, 20.0), st.integers(1, 10_000))
    def test_probability_in_unit_interval(self, mi, u, cardinality):
        """Test the selected bound is a probability."""
        result = bound_engine.tail_bound(UNIT, "selected", cardinality, u, mi=mi)
        assert 0.0 <= result.probability <= 1.0
