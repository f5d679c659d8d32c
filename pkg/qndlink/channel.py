"""Noisy quantum channel for qndlink.

A lossy channel of amplitude transmitivity T preceded by a phase-insensitive
amplifier that compensates the loss. Its net action is additive symmetric
Gaussian noise: X' = X + √(1-T²)·𝒳, P' = P + √(1-T²)·𝒫, means unchanged.
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from qndlink.state import V0, GaussianState, ModeRef, quadrature_indices


class ChannelModel(BaseModel):
    """Pre-amplified lossy channel.

    *noise_var* is the variance of each noise operator; the default 2·V0 is
    the vacuum environment plus the amplifier idler.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    transmitivity: float = Field(gt=0.0, le=1.0)
    noise_var: float = Field(default=2 * V0, ge=0.0)

    @property
    def added_noise(self) -> float:
        return (1.0 - self.transmitivity**2) * self.noise_var


def added_noise_of(ch: ChannelModel) -> float:
    """Variance added to each quadrature: (1 - T²)·noise_var."""
    return ch.added_noise


def apply_channel(state: GaussianState, mode: ModeRef, ch: ChannelModel) -> GaussianState:
    """Send *mode* of *state* through *ch*; other modes and all means untouched."""
    idx = quadrature_indices(state.index_of(mode))
    cov = np.array(state.cov)
    cov[idx, idx] += ch.added_noise
    return GaussianState(state.mean, cov, state.labels)
