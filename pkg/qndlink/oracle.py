"""Monte-Carlo oracle for qndlink.

Samples phase-space trajectories from Gaussian states and pushes them
through a circuit classically: linear maps act on samples, channels add
sampled noise, homodyne outcomes are read off the sampled quadrature and
fed forward. Empirical moments of the outputs validate the exact ensemble
results.

Stream rule: chunk k of a run with seed s draws from
``default_rng(SeedSequence([s, k]))``; chunks hold ``CHUNK_SIZE`` runs and
are merged in chunk order, so results do not depend on the worker count.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from qndlink.circuit import Channel, Circuit, Gate, MeasureFeedforward, Relabel
from qndlink.state import GaussianState, quadrature_indices
from qndlink.symplectic import embed

if TYPE_CHECKING:
    from qndlink.protocols import ProtocolConfig

logger = logging.getLogger(__name__)

CHUNK_SIZE = 1 << 16
CLIP_TOL = 1e-10


# ---------------------------------------------------------------------------
# Result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Samples of a state, reproducible from (seed, stream_id)."""

    values: np.ndarray
    seed: int
    stream_id: int

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class EmpiricalMoments:
    """Sample mean and covariance with their standard errors."""

    mean: np.ndarray
    cov: np.ndarray
    mean_errors: np.ndarray
    cov_errors: np.ndarray
    n_samples: int

    def deviation(self, mean: np.ndarray, cov: np.ndarray) -> float:
        """Largest entrywise |empirical - expected| in units of standard error."""
        with np.errstate(divide="ignore", invalid="ignore"):
            dm = np.abs(self.mean - mean) / self.mean_errors
            dc = np.abs(self.cov - cov) / self.cov_errors
        # entries with zero error must match exactly
        dm = np.where(self.mean_errors > 0, dm, np.where(np.isclose(self.mean, mean, atol=1e-12), 0.0, np.inf))
        dc = np.where(self.cov_errors > 0, dc, np.where(np.isclose(self.cov, cov, atol=1e-12), 0.0, np.inf))
        return float(max(np.max(dm), np.max(dc)))

    def agrees_with(self, state: GaussianState, n_se: float = 5.0) -> bool:
        return self.deviation(state.mean, state.cov) <= n_se


@dataclass(frozen=True, eq=False)
class TrajectoryRun:
    """Output moments plus the sampled outcomes of each measurement step."""

    moments: EmpiricalMoments
    outcomes: dict[int, np.ndarray]


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def stream_rng(seed: int, stream_id: int) -> np.random.Generator:
    """Independent generator for sub-stream *stream_id* of *seed*."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream_id)]))


def symmetric_sqrt(cov: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix, clipping tiny negative eigenvalues."""
    values, vectors = np.linalg.eigh(cov)
    floor = -CLIP_TOL * max(1.0, float(np.max(np.abs(values))))
    if np.min(values) < floor:
        raise ValueError(f"Covariance is not positive semidefinite (eigenvalue {np.min(values):.3e})")
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.T


def _draw(state: GaussianState, n: int, rng: np.random.Generator) -> np.ndarray:
    root = symmetric_sqrt(state.cov)
    return state.mean + rng.standard_normal((n, state.cov.shape[0])) @ root


def sample_state(state: GaussianState, n: int, seed: int, stream_id: int = 0) -> SampleBatch:
    """Draw *n* phase-space samples of *state*."""
    if n < 1:
        raise ValueError(f"Sample count must be at least 1, got {n}")
    values = _draw(state, n, stream_rng(seed, stream_id))
    return SampleBatch(values=values, seed=seed, stream_id=stream_id)


def empirical_moments(batch: SampleBatch | np.ndarray) -> EmpiricalMoments:
    """Unbiased sample moments with Gaussian standard errors."""
    values = batch.values if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise ValueError(f"Need at least 2 samples for moments, got {n}")
    mean = values.mean(axis=0)
    cov = np.atleast_2d(np.cov(values, rowvar=False, ddof=1))
    cov = 0.5 * (cov + cov.T)
    diag = np.diag(cov)
    mean_errors = np.sqrt(diag / n)
    cov_errors = np.sqrt((np.outer(diag, diag) + cov**2) / n)
    return EmpiricalMoments(mean, cov, mean_errors, cov_errors, n)


# ---------------------------------------------------------------------------
# Circuit trajectories
# ---------------------------------------------------------------------------

def _run_chunk(circuit: Circuit, n: int, seed: int, chunk: int) -> tuple[np.ndarray, dict[int, np.ndarray]]:
    rng = stream_rng(seed, chunk)
    samples = _draw(circuit.initial, n, rng)
    labels = list(circuit.initial.labels)
    outcomes: dict[int, np.ndarray] = {}

    def column(mode: str, offset: int) -> int:
        return 2 * labels.index(mode) + offset

    for position, step in enumerate(circuit.steps):
        if isinstance(step, Gate):
            targets = [labels.index(m) for m in step.modes]
            matrix = embed(step.op, targets, len(labels)).matrix
            samples = samples @ matrix.T
        elif isinstance(step, Channel):
            cols = quadrature_indices(labels.index(step.mode))
            samples[:, cols] += rng.normal(0.0, math.sqrt(step.model.added_noise), (n, 2))
        elif isinstance(step, MeasureFeedforward):
            rule = step.rule
            source = str(rule.source.mode)
            outcome = samples[:, column(source, rule.source.axis.offset)].copy()
            for target, gain in rule.gains:
                samples[:, column(str(target.mode), target.axis.offset)] += gain * outcome
            samples = np.delete(samples, quadrature_indices(labels.index(source)), axis=1)
            labels.remove(source)
            outcomes[position] = outcome
        elif isinstance(step, Relabel):
            labels = [step.mapping.get(label, label) for label in labels]
        else:
            raise TypeError(f"Unknown circuit step: {step!r}")

    cols = [q for mode in circuit.outputs for q in quadrature_indices(labels.index(mode))]
    return samples[:, cols], outcomes


def run_circuit_trajectories(
    circuit: Circuit,
    n_runs: int,
    seed: int,
    workers: int = 1,
) -> TrajectoryRun:
    """Sample *n_runs* trajectories of *circuit* and aggregate output moments."""
    if n_runs < 2:
        raise ValueError(f"Need at least 2 trajectories, got {n_runs}")
    sizes = [min(CHUNK_SIZE, n_runs - start) for start in range(0, n_runs, CHUNK_SIZE)]
    logger.debug("sampling %d trajectories in %d chunk(s), %d worker(s)", n_runs, len(sizes), workers)

    def work(chunk: int) -> tuple[np.ndarray, dict[int, np.ndarray]]:
        return _run_chunk(circuit, sizes[chunk], seed, chunk)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, range(len(sizes))))
    else:
        results = [work(chunk) for chunk in range(len(sizes))]

    outputs = np.concatenate([values for values, _ in results])
    outcomes = {
        position: np.concatenate([chunk_outcomes[position] for _, chunk_outcomes in results])
        for position in results[0][1]
    }
    return TrajectoryRun(empirical_moments(outputs), outcomes)


def run_protocol_trajectories(
    config: ProtocolConfig,
    n_runs: int,
    seed: int,
    workers: int = 1,
) -> EmpiricalMoments:
    """Empirical (A, B) moments of *config* over *n_runs* trajectories."""
    from qndlink.protocols import build_circuit

    return run_circuit_trajectories(build_circuit(config), n_runs, seed, workers).moments
