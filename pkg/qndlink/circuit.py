"""Protocol circuits for qndlink.

A circuit is an initial product state, an ordered list of steps (local
Gaussian unitaries, noisy channels, measure-and-feedforward, relabels) and
the output modes. The same circuit is executed exactly on Gaussian states
here and sampled trajectory by trajectory in :mod:`qndlink.oracle`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from qndlink.channel import ChannelModel, apply_channel
from qndlink.measurement import FeedforwardRule, ensemble_map
from qndlink.state import GaussianState
from qndlink.symplectic import SymplecticMap, apply_local

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Steps
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Gate:
    """Local Gaussian unitary on the labelled modes."""

    op: SymplecticMap
    modes: tuple[str, ...]
    params: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Channel:
    """Noisy channel acting on one mode."""

    mode: str
    model: ChannelModel


@dataclass(frozen=True, eq=False)
class MeasureFeedforward:
    """Homodyne measurement of ``rule.source`` followed by its feedforward."""

    rule: FeedforwardRule


@dataclass(frozen=True, eq=False)
class Relabel:
    """Rename modes, e.g. the receiver half of a teleportation."""

    mapping: dict[str, str]


Step = Union[Gate, Channel, MeasureFeedforward, Relabel]


@dataclass(frozen=True, eq=False)
class TranscriptEntry:
    """One applied step as reported in a ProtocolResult."""

    operation: str
    modes: tuple[str, ...]
    params: dict[str, float] = field(default_factory=dict)
    outcomes: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class Circuit:
    """Initial state, steps and output modes of one protocol run."""

    initial: GaussianState
    steps: tuple[Step, ...]
    outputs: tuple[str, ...]

    def transcript(self, outcomes: Optional[dict[int, np.ndarray]] = None) -> list[TranscriptEntry]:
        """Describe every step; *outcomes* maps step positions to sampled outcomes."""
        outcomes = outcomes or {}
        entries = [TranscriptEntry("prepare", self.initial.labels)]
        for position, step in enumerate(self.steps):
            entries.append(_describe(step, outcomes.get(position)))
        return entries


def _describe(step: Step, outcomes: Optional[np.ndarray]) -> TranscriptEntry:
    if isinstance(step, Gate):
        return TranscriptEntry(step.op.name, step.modes, dict(step.params))
    if isinstance(step, Channel):
        return TranscriptEntry(
            "channel",
            (step.mode,),
            {"T": step.model.transmitivity, "noise_var": step.model.noise_var},
        )
    if isinstance(step, MeasureFeedforward):
        rule = step.rule
        params = {str(target): gain for target, gain in rule.gains}
        modes = (str(rule.source.mode),) + tuple(str(t.mode) for t, _ in rule.gains)
        return TranscriptEntry(f"measure_{rule.source.axis.value}", modes, params, outcomes)
    return TranscriptEntry("relabel", tuple(step.mapping), {})


# ---------------------------------------------------------------------------
# Ensemble execution
# ---------------------------------------------------------------------------

def run_ensemble(circuit: Circuit) -> GaussianState:
    """Execute *circuit* exactly and return the output modes' state."""
    state = circuit.initial
    for step in circuit.steps:
        if isinstance(step, Gate):
            state = apply_local(state, step.op, step.modes)
        elif isinstance(step, Channel):
            state = apply_channel(state, step.mode, step.model)
        elif isinstance(step, MeasureFeedforward):
            state = ensemble_map(state, step.rule.source, step.rule)
        elif isinstance(step, Relabel):
            state = state.relabel(step.mapping)
        else:
            raise TypeError(f"Unknown circuit step: {step!r}")
    logger.debug("ensemble run finished with modes %s", state.labels)
    return state.reduced(circuit.outputs)
