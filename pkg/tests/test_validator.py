"""Tests for qndlink.validator — the checks behind ``qndlink validate``."""

import numpy as np
import pytest

from qndlink.state import check_physicality
from qndlink.symplectic import MAP_TOL, symplectic_error
from qndlink.validator import (
    ValidationResult,
    check_channel_terms,
    check_classical_floor,
    check_crossing,
    check_entanglement_witness,
    check_fig1_reproduction,
    check_fig2_reproduction,
    check_gain_split,
    check_sandwich_identity,
    check_teleport_baseline,
    random_map,
    random_state,
    run_all_checks,
)


# ---------------------------------------------------------------------------
# ValidationResult
# ---------------------------------------------------------------------------


class TestValidationResult:
    """Aggregation of check outcomes."""

    def test_empty_is_ok(self):
        """No failures means ok."""
        assert ValidationResult().ok

    def test_failure_not_ok(self):
        """One failure flips ok."""
        result = ValidationResult(passed=["a"], failed=["b"])
        assert not result.ok


# ---------------------------------------------------------------------------
# Random generators
# ---------------------------------------------------------------------------


class TestRandomGenerators:
    """random_map and random_state."""

    @pytest.mark.parametrize("n_modes", [1, 2, 3, 4])
    def test_map_symplectic(self, n_modes):
        """Random maps satisfy S Ω Sᵀ = Ω."""
        rng = np.random.default_rng(n_modes)
        op = random_map(rng, n_modes)
        scale = max(1.0, float(np.max(np.abs(op.matrix)))) ** 2
        assert op.n_modes == n_modes
        assert symplectic_error(op.matrix) <= MAP_TOL * scale

    def test_state_physical(self):
        """Random states obey the uncertainty principle."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            assert check_physicality(random_state(rng, 3)).ok

    def test_seeded(self):
        """Same seed, same state."""
        a = random_state(np.random.default_rng(5), 2)
        b = random_state(np.random.default_rng(5), 2)
        assert np.array_equal(a.cov, b.cov)
        assert np.array_equal(a.mean, b.mean)


# ---------------------------------------------------------------------------
# Individual checks
# ---------------------------------------------------------------------------


class TestChecks:
    """Each deterministic check passes on the shipped implementation."""

    @pytest.mark.parametrize("check", [
        check_sandwich_identity,
        check_fig1_reproduction,
        check_fig2_reproduction,
        check_classical_floor,
        check_channel_terms,
        check_crossing,
        check_teleport_baseline,
        check_entanglement_witness,
        check_gain_split,
    ])
    def test_passes(self, check):
        """The check returns (True, message)."""
        passed, message = check()
        assert passed, message
        assert message

    def test_crossing_reports_orderings(self):
        """The crossing message lists every gain."""
        _, message = check_crossing()
        assert "G=0.5" in message
        assert "G=2.0" in message


# ---------------------------------------------------------------------------
# run_all_checks
# ---------------------------------------------------------------------------


class TestRunAllChecks:
    """The full deterministic run."""

    def test_all_pass_without_oracle(self):
        """Every check except the oracle passes."""
        result = run_all_checks(seed=7, run_oracle=False)
        assert result.ok, result.failed
        assert len(result.passed) == 10

    def test_oracle_included(self):
        """A small oracle run adds one more passing check."""
        result = run_all_checks(seed=7, runs=20_000, run_oracle=True)
        assert result.ok, result.failed
        assert any("Oracle agrees" in msg for msg in result.passed)
