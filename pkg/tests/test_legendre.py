"""Tests for psi envelopes and the Legendre dual."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chainmi.core.exceptions import DomainCapReached, EnvelopeError, OutOfRange
from chainmi.models.information import PsiEnvelope
from chainmi.services.legendre import chernoff_tail, psi_star, psi_star_inverse


def half_square_grid() -> PsiEnvelope:
    """lambda^2 / 2 sampled at 0, 0.5, ..., 10; last slope 9.75."""
    return PsiEnvelope.from_grid([(i / 2, 0.5 * (i / 2) ** 2) for i in range(21)])


class TestPsiEnvelope:
    """Tests for PsiEnvelope construction."""

    def test_subgaussian(self):
        """Test the quadratic envelope."""
        env = PsiEnvelope.subgaussian(2.0)
        assert env.is_subgaussian
        assert env(3.0) == pytest.approx(9.0)

    def test_subgaussian_rejects_zero_variance(self):
        """Test sigma^2 must be positive."""
        with pytest.raises(EnvelopeError):
            PsiEnvelope.subgaussian(0.0)

    def test_general_must_vanish_at_zero(self):
        """Test psi(0) != 0 is rejected."""
        with pytest.raises(EnvelopeError):
            PsiEnvelope.general(lambda lam: lam * lam + 1.0)

    def test_general_must_be_convex(self):
        """Test a concave evaluator is rejected."""
        with pytest.raises(EnvelopeError):
            PsiEnvelope.general(lambda lam: math.sqrt(lam))

    def test_grid_interpolation(self):
        """Test the piecewise-linear grid and its extrapolation."""
        env = PsiEnvelope.from_grid([(1.0, 0.5), (2.0, 2.0)])
        assert env(0.0) == 0.0
        assert env(0.5) == pytest.approx(0.25)
        assert env(1.5) == pytest.approx(1.25)
        assert env(3.0) == pytest.approx(3.5)

    def test_grid_must_be_convex(self):
        """Test decreasing slopes are rejected."""
        with pytest.raises(EnvelopeError):
            PsiEnvelope.from_grid([(1.0, 2.0), (2.0, 2.5)])


class TestPsiStar:
    """Tests for psi_star."""

    def test_subgaussian_closed_form(self):
        """Test x^2 / 2 at sigma^2 = 1."""
        assert psi_star(PsiEnvelope.subgaussian(1.0), 2.0) == pytest.approx(2.0)

    def test_zero(self):
        """Test psi*(0) = 0."""
        assert psi_star(PsiEnvelope.subgaussian(1.0), 0.0) == 0.0
        assert psi_star(PsiEnvelope.general(lambda lam: 0.5 * lam * lam), 0.0) == 0.0

    def test_general_matches_closed_form(self):
        """Test the numeric dual of lambda^2 / 2."""
        env = PsiEnvelope.general(lambda lam: 0.5 * lam * lam)
        assert psi_star(env, 2.0) == pytest.approx(2.0, abs=1e-8)

    def test_chernoff(self):
        """Test exp(-x^2 / 2)."""
        assert chernoff_tail(PsiEnvelope.subgaussian(1.0), 1.0) == pytest.approx(math.exp(-0.5))

    @pytest.mark.parametrize("sigma2", [0.5, 1.0, 3.0])
    def test_chernoff_dominates_simulated_tail(self, sigma2):
        """Test P[X >= x] <= exp(-psi*(x)) for simulated N(0, sigma^2)."""
        env = PsiEnvelope.subgaussian(sigma2)
        samples = np.random.default_rng(21).normal(0.0, math.sqrt(sigma2), size=200_000)
        for x in (0.25, 0.5, 1.0, 2.0, 3.0):
            hits = samples >= x
            stderr = hits.std(ddof=1) / math.sqrt(hits.size)
            assert hits.mean() <= chernoff_tail(env, x) + 3 * stderr

    def test_grid_infinite_past_last_slope(self):
        """Test the dual of a linearly growing envelope escapes the search."""
        with pytest.raises(DomainCapReached):
            psi_star(half_square_grid(), 12.0)


class TestPsiStarInverse:
    """Tests for psi_star_inverse."""

    def test_subgaussian(self):
        """Test sqrt(2 * 0.5) = 1."""
        assert psi_star_inverse(PsiEnvelope.subgaussian(1.0), 0.5) == pytest.approx(1.0)

    def test_zero(self):
        """Test y = 0."""
        assert psi_star_inverse(PsiEnvelope.subgaussian(1.0), 0.0) == 0.0

    def test_infinite(self):
        """Test y = inf propagates."""
        assert math.isinf(psi_star_inverse(PsiEnvelope.subgaussian(1.0), math.inf))

    def test_negative(self):
        """Test y < 0."""
        with pytest.raises(OutOfRange):
            psi_star_inverse(PsiEnvelope.subgaussian(1.0), -0.1)

    @pytest.mark.parametrize("sigma2", [0.25, 1.0, 4.0])
    @pytest.mark.parametrize("y", [0.1, 1.0, 2.0, 5.0, 20.0])
    def test_general_matches_closed_form(self, sigma2, y):
        """Test the numeric inverse against sqrt(2 sigma^2 y)."""
        env = PsiEnvelope.general(lambda lam: 0.5 * lam * lam * sigma2)
        assert psi_star_inverse(env, y) == pytest.approx(math.sqrt(2 * sigma2 * y), abs=1e-8)

    def test_grid_target_below_last_slope(self):
        """Test doubling past the last grid slope still finds the root."""
        # psi* is within 1/32 of x^2 / 2 below 9.75 and infinite above it
        x = psi_star_inverse(half_square_grid(), 40.0)
        assert x == pytest.approx(math.sqrt(80.0), abs=1e-2)
        assert psi_star(half_square_grid(), x) == pytest.approx(40.0, abs=1e-6)

    def test_grid_target_above_dual_range(self):
        """Test targets above psi*(last slope) = 47.5 return the last slope."""
        assert psi_star_inverse(half_square_grid(), 60.0) == pytest.approx(9.75, abs=1e-6)

    def test_grid_envelope(self):
        """Test a grid through lambda^2 / 2 lands near the subgaussian inverse."""
        grid = [(i / 10, 0.5 * (i / 10) ** 2) for i in range(1, 101)]
        env = PsiEnvelope.from_grid(grid)
        assert psi_star_inverse(env, 0.5) == pytest.approx(1.0, abs=1e-2)

    @given(st.floats(0.0, 50.0))
    def test_inverts_psi_star(self, y):
        """Test psi*(psi*^-1(y)) = y."""
        env = PsiEnvelope.subgaussian(3.0)
        assert psi_star(env, psi_star_inverse(env, y)) == pytest.approx(y, abs=1e-9)
