"""Tests for verbose service logging."""

import pytest

from chainmi.core.logger import set_verbose
from chainmi.models.information import PsiEnvelope
from chainmi.services.info_theory import entropy
from chainmi.services.legendre import psi_star
from chainmi.services.metric_core import circle_points, covering_number, space_from_points


@pytest.fixture
def verbose():
    set_verbose(True)
    yield
    set_verbose(False)


class TestVerboseLogging:
    """Tests for log_call and log_result in the services."""

    def test_calls_and_results_on_stderr(self, verbose, capsys):
        """Test covering, entropy and dual calls are logged with their results."""
        covering_number(space_from_points(circle_points(8)), 0.8)
        entropy([0.5, 0.5])
        psi_star(PsiEnvelope.general(lambda lam: 0.5 * lam * lam), 1.0)
        err = capsys.readouterr().err
        for name in (
            "metric_core.validate_metric",
            "metric_core.greedy_epsilon_net",
            "info_theory.entropy",
            "legendre.psi_star",
        ):
            assert f"→ {name}(" in err
            assert f"← {name} = " in err
        assert "metric_core.covering_number = 4" in err

    def test_quiet_by_default(self, capsys):
        """Test nothing is printed without verbose mode."""
        entropy([0.25, 0.75])
        assert capsys.readouterr().err == ""
