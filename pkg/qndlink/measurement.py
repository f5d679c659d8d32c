"""Homodyne measurement and classical feedforward for qndlink.

Ideal single-quadrature homodyne detection with Gaussian conditioning,
outcome sampling, outcome-proportional displacements, and the
deterministic outcome-averaged map that the protocols use.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from qndlink.state import GaussianState, ModeRef, Quadrature, quadrature_indices

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-12


class DegenerateMeasurementError(ValueError):
    """The measured quadrature has (numerically) zero variance."""


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureSelector:
    """One quadrature of one mode, addressed by label (or raw index)."""

    mode: ModeRef
    axis: Quadrature

    def __post_init__(self) -> None:
        object.__setattr__(self, "axis", Quadrature(self.axis))

    def __str__(self) -> str:
        return f"{self.axis.value.upper()}_{self.mode}"


@dataclass(frozen=True)
class HomodyneOutcome:
    """A measured quadrature value."""

    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"Homodyne outcome must be finite, got {self.value}")


@dataclass(frozen=True)
class FeedforwardRule:
    """Displace each target quadrature by gain × outcome of *source*."""

    source: QuadratureSelector
    gains: tuple[tuple[QuadratureSelector, float], ...] = field(default=())

    def __post_init__(self) -> None:
        gains = tuple((target, float(gain)) for target, gain in self.gains)
        for target, gain in gains:
            if target.mode == self.source.mode:
                raise ValueError(f"Feedforward target {target} is the measured mode")
            if not math.isfinite(gain):
                raise ValueError(f"Feedforward gain for {target} must be finite")
        object.__setattr__(self, "gains", gains)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _partition(state: GaussianState, sel: QuadratureSelector) -> tuple[int, list[int], tuple[str, ...]]:
    """Return (measured index, remaining indices, remaining labels)."""
    if state.n_modes < 2:
        raise ValueError("Measurement needs at least two modes (one must remain)")
    mode = state.index_of(sel.mode)
    measured = state.quadrature(mode, sel.axis)
    removed = set(quadrature_indices(mode))
    rest = [i for i in range(2 * state.n_modes) if i not in removed]
    labels = tuple(label for i, label in enumerate(state.labels) if i != mode)
    return measured, rest, labels


def _measured_variance(state: GaussianState, measured: int, sel: QuadratureSelector) -> float:
    variance = float(state.cov[measured, measured])
    if variance <= DEGENERACY_TOL:
        raise DegenerateMeasurementError(f"{sel} has variance {variance:.3e}; outcome is deterministic")
    return variance


def _gain_vector(reduced: GaussianState, rule: FeedforwardRule) -> np.ndarray:
    gains = np.zeros(2 * reduced.n_modes)
    for target, gain in rule.gains:
        gains[reduced.quadrature(target.mode, target.axis)] += gain
    return gains


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def condition_on_outcome(
    state: GaussianState,
    sel: QuadratureSelector,
    outcome: Union[float, HomodyneOutcome],
) -> GaussianState:
    """State of the remaining modes after measuring *sel* with *outcome*.

    The measured mode is removed from the register; the conditional
    covariance does not depend on the outcome.
    """
    value = outcome.value if isinstance(outcome, HomodyneOutcome) else float(outcome)
    measured, rest, labels = _partition(state, sel)
    variance = _measured_variance(state, measured, sel)

    cross = state.cov[rest, measured]
    mean = state.mean[rest] + cross * (value - state.mean[measured]) / variance
    cov = state.cov[np.ix_(rest, rest)] - np.outer(cross, cross) / variance
    return GaussianState(mean, cov, labels)


def sample_outcome(
    state: GaussianState,
    sel: QuadratureSelector,
    rng: np.random.Generator,
) -> tuple[HomodyneOutcome, GaussianState]:
    """Draw a homodyne outcome from its marginal and condition on it."""
    measured, _, _ = _partition(state, sel)
    variance = _measured_variance(state, measured, sel)
    value = float(rng.normal(state.mean[measured], math.sqrt(variance)))
    return HomodyneOutcome(value), condition_on_outcome(state, sel, value)


def feedforward_displace(
    state: GaussianState,
    rule: FeedforwardRule,
    outcome: Union[float, HomodyneOutcome],
) -> GaussianState:
    """Shift each target quadrature mean by gain × outcome."""
    value = outcome.value if isinstance(outcome, HomodyneOutcome) else float(outcome)
    mean = state.mean + _gain_vector(state, rule) * value
    return GaussianState(mean, state.cov, state.labels)


def ensemble_map(
    state: GaussianState,
    sel: QuadratureSelector,
    rule: FeedforwardRule,
) -> GaussianState:
    """Measure *sel*, feed forward by *rule*, and average over all outcomes.

    With remaining quadratures R, measured quadrature m and gain vector c,
    the result is the Gaussian state of R + c·m.
    """
    if rule.source != sel:
        raise ValueError(f"Feedforward rule reads {rule.source}, measurement is {sel}")
    measured, rest, labels = _partition(state, sel)
    variance = _measured_variance(state, measured, sel)

    gains = _gain_vector(GaussianState(state.mean[rest], state.cov[np.ix_(rest, rest)], labels), rule)
    cross = state.cov[rest, measured]
    mean = state.mean[rest] + gains * state.mean[measured]
    cov = (
        state.cov[np.ix_(rest, rest)]
        + np.outer(gains, cross)
        + np.outer(cross, gains)
        + variance * np.outer(gains, gains)
    )
    logger.debug("ensemble map on %s with %d feedforward target(s)", sel, len(rule.gains))
    return GaussianState(mean, cov, labels)
