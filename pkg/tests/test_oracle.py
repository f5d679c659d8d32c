"""Tests for qndlink.oracle — Monte-Carlo sampling of states and circuits."""

import numpy as np
import pytest

from qndlink.channel import ChannelModel
from qndlink.oracle import (
    CHUNK_SIZE,
    SampleBatch,
    empirical_moments,
    run_circuit_trajectories,
    run_protocol_trajectories,
    sample_state,
    stream_rng,
    symmetric_sqrt,
)
from qndlink.protocols import ProtocolConfig, ProtocolKind, build_circuit, run_protocol
from qndlink.state import V0, GaussianState, epr_pair, squeezed_vacuum, vacuum

RUNS = 200_000


def _config(kind: str, gain: float = 1.0, r: float = 0.0, **extra) -> ProtocolConfig:
    return ProtocolConfig(kind=kind, gain_alice=gain, gain_bob=gain, squeezing=r, **extra)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


class TestSampleState:
    """sample_state and the stream rule."""

    def test_vacuum_variance(self):
        """10⁶ vacuum samples give Var within 1% of V0."""
        batch = sample_state(vacuum(1), 1_000_000, seed=1)
        assert np.allclose(np.var(batch.values, axis=0), V0, rtol=0.01)

    def test_reproducible(self):
        """Same seed and stream reproduce the batch exactly."""
        a = sample_state(epr_pair(1.0), 1000, seed=9, stream_id=3)
        b = sample_state(epr_pair(1.0), 1000, seed=9, stream_id=3)
        assert np.array_equal(a.values, b.values)
        assert (a.seed, a.stream_id, a.n_samples) == (9, 3, 1000)

    def test_streams_differ(self):
        """Different stream ids give different samples."""
        a = sample_state(vacuum(1), 100, seed=9, stream_id=0)
        b = sample_state(vacuum(1), 100, seed=9, stream_id=1)
        assert not np.array_equal(a.values, b.values)

    def test_squeezed_mean(self):
        """Squeezed-vacuum samples have mean zero within 5 SE."""
        moments = empirical_moments(sample_state(squeezed_vacuum(1.5), RUNS, seed=4))
        assert np.all(np.abs(moments.mean) <= 5 * moments.mean_errors)

    def test_moments_agree(self):
        """EPR samples agree with the exact moments."""
        state = epr_pair(0.8)
        assert empirical_moments(sample_state(state, RUNS, seed=2)).agrees_with(state)

    def test_needs_samples(self):
        """n must be at least 1."""
        with pytest.raises(ValueError):
            sample_state(vacuum(1), 0, seed=0)

    def test_stream_rng_deterministic(self):
        """stream_rng(seed, id) is a pure function of its arguments."""
        assert stream_rng(3, 4).random() == stream_rng(3, 4).random()


class TestSymmetricSqrt:
    """symmetric_sqrt with clipping."""

    def test_square(self):
        """The root squares back to the matrix."""
        cov = epr_pair(1.0).cov
        root = symmetric_sqrt(cov)
        assert np.allclose(root @ root, cov)
        assert np.allclose(root, root.T)

    def test_clips_tiny_negative(self):
        """Round-off below zero is clipped."""
        cov = np.diag([1.0, -1e-13])
        assert np.allclose(symmetric_sqrt(cov), np.diag([1.0, 0.0]))

    def test_rejects_indefinite(self):
        """Clearly negative eigenvalues are an error."""
        with pytest.raises(ValueError, match="positive semidefinite"):
            symmetric_sqrt(np.diag([1.0, -0.1]))


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------


class TestEmpiricalMoments:
    """empirical_moments and deviation."""

    def test_constant_batch(self):
        """A constant batch has zero covariance."""
        moments = empirical_moments(np.ones((10, 2)))
        assert np.array_equal(moments.cov, np.zeros((2, 2)))
        assert np.array_equal(moments.mean, [1.0, 1.0])

    def test_needs_two_samples(self):
        """Covariance needs n ≥ 2."""
        with pytest.raises(ValueError):
            empirical_moments(np.ones((1, 2)))

    def test_accepts_batch(self):
        """SampleBatch and raw arrays give the same moments."""
        batch = sample_state(vacuum(2), 500, seed=1)
        assert np.array_equal(empirical_moments(batch).cov, empirical_moments(batch.values).cov)

    def test_errors_positive_and_symmetric(self):
        """Standard errors are positive and the covariance symmetric."""
        moments = empirical_moments(sample_state(epr_pair(0.5), 5000, seed=6))
        assert np.all(moments.cov_errors > 0)
        assert np.all(moments.mean_errors > 0)
        assert np.array_equal(moments.cov, moments.cov.T)
        assert moments.n_samples == 5000

    def test_deviation_flags_wrong_state(self):
        """A wrong reference is far outside 5 SE."""
        moments = empirical_moments(sample_state(vacuum(1), RUNS, seed=8))
        wrong = GaussianState(np.zeros(2), 0.6 * np.eye(2))
        assert not moments.agrees_with(wrong)


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------


class TestTrajectories:
    """Sampled circuits against the exact ensemble."""

    def test_fig1_variance(self):
        """Fig. 1, G = 1, r = 0: Var(P'_A) ≈ 1.5."""
        moments = run_protocol_trajectories(_config("fig1"), RUNS, seed=1)
        assert abs(moments.cov[1, 1] - 1.5) <= 5 * moments.cov_errors[1, 1]

    def test_classical_variance(self):
        """Classical benchmark, G = 1: Var(X'_B) ≈ 2.0."""
        moments = run_protocol_trajectories(_config("classical"), RUNS, seed=2)
        assert abs(moments.cov[2, 2] - 2.0) <= 5 * moments.cov_errors[2, 2]

    def test_ideal_variance(self):
        """Ideal QND, g = 2 on vacua: Var(X'_B) ≈ 2.5."""
        config = ProtocolConfig(kind="ideal", gain_alice=2.0, gain_bob=1.0)
        moments = run_protocol_trajectories(config, RUNS, seed=3)
        assert abs(moments.cov[2, 2] - 2.5) <= 5 * moments.cov_errors[2, 2]

    @pytest.mark.parametrize("kind", [k.value for k in ProtocolKind])
    def test_agrees_with_ensemble(self, kind):
        """Every protocol with a noisy channel agrees within 5 SE."""
        config = _config(kind, 1.0, 1.0, channel=ChannelModel(transmitivity=0.8))
        exact = run_protocol(config).output
        moments = run_protocol_trajectories(config, RUNS, seed=11)
        assert moments.agrees_with(exact)

    def test_worker_count_irrelevant(self):
        """Chunked streams merge to identical results for any worker count."""
        circuit = build_circuit(_config("fig2", 1.0, 1.0))
        n = 2 * CHUNK_SIZE + 5
        serial = run_circuit_trajectories(circuit, n, seed=4, workers=1)
        parallel = run_circuit_trajectories(circuit, n, seed=4, workers=3)
        assert np.array_equal(serial.moments.mean, parallel.moments.mean)
        assert np.array_equal(serial.moments.cov, parallel.moments.cov)
        for position in serial.outcomes:
            assert np.array_equal(serial.outcomes[position], parallel.outcomes[position])

    def test_outcomes_recorded(self):
        """Every measurement step records one outcome per run."""
        circuit = build_circuit(_config("teleport"))
        run = run_circuit_trajectories(circuit, 1000, seed=0)
        assert len(run.outcomes) == 4
        assert all(values.shape == (1000,) for values in run.outcomes.values())

    def test_needs_two_runs(self):
        """n_runs < 2 is rejected."""
        with pytest.raises(ValueError):
            run_circuit_trajectories(build_circuit(_config("fig1")), 1, seed=0)

    def test_batch_type(self):
        """sample_state returns a SampleBatch."""
        assert isinstance(sample_state(vacuum(1), 3, seed=0), SampleBatch)
