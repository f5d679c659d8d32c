"""Closed-form noise terms of the QND-at-a-distance schemes.

Independent references for the circuit simulations, written in terms of the
resource variances and c = (1 - T²)·noise_var of the channel (0 without one).
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from qndlink.channel import ChannelModel
from qndlink.state import V0, GaussianState


def channel_noise(channel: Optional[ChannelModel]) -> float:
    return channel.added_noise if channel is not None else 0.0


def squeezed_variance(r: float) -> float:
    """Variance V0·e^{-2r} of the squeezed quadrature."""
    return V0 * math.exp(-2 * r)


def epr_variance(r: float) -> float:
    """Var(X1+X2) = Var(P1-P2) = 2·V0·e^{-2r}."""
    return 2 * V0 * math.exp(-2 * r)


def fig1_added_noise(
    gain_alice: float,
    gain_bob: float,
    r: float,
    channel: Optional[ChannelModel] = None,
) -> tuple[float, float]:
    """(added Var(P'_A), added Var(X'_B)) for the single-channel scheme."""
    c = channel_noise(channel)
    return gain_alice**2 * (squeezed_variance(r) + c), gain_bob**2 * c


def fig2_added_noise(
    gain_alice: float,
    gain_bob: float,
    r: float,
    channel: Optional[ChannelModel] = None,
) -> tuple[float, float]:
    """(added Var(P'_A), added Var(X'_B)) for the shared-entanglement scheme."""
    noise = epr_variance(r) + channel_noise(channel)
    return gain_alice**2 * noise, gain_bob**2 * noise


def classical_added_noise(
    gain_alice: float,
    gain_bob: float,
    channel: Optional[ChannelModel] = None,
) -> tuple[float, float]:
    """Shared-entanglement wiring with vacuum ancillas: 2·G²·V0 per quadrature."""
    return fig2_added_noise(gain_alice, gain_bob, 0.0, channel)


def teleport_output(
    g: float,
    r: float,
    channel: Optional[ChannelModel],
    input_a: GaussianState,
    input_b: GaussianState,
) -> GaussianState:
    """Exact (A, B) output of the two-way teleportation strategy.

    X'_A = X_A, P'_A = P_A - g·P_B - g·L_P1, X'_B = X_B + g·X_A + L_X1 + L_X2,
    P'_B = P_B + L_P1 + L_P2, with every L of variance 2·V0·e^{-2r} + c.
    """
    noise = epr_variance(r) + channel_noise(channel)
    # columns: x_A, p_A, x_B, p_B, Lx1, Lp1, Lx2, Lp2
    transfer = np.array([
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, -g, 0.0, -g, 0.0, 0.0],
        [g, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0],
    ])
    sources = np.zeros((8, 8))
    sources[:2, :2] = input_a.cov
    sources[2:4, 2:4] = input_b.cov
    sources[4:, 4:] = noise * np.eye(4)
    mean = transfer[:, :4] @ np.concatenate([input_a.mean, input_b.mean])
    return GaussianState(mean, transfer @ sources @ transfer.T, ("A", "B"))


def fig1_optimal_gain_alice(g: float, r: float, channel: Optional[ChannelModel]) -> Optional[float]:
    """Minimizer of G_A²·(ρ + c) + (g/G_A)²·c; None when c = 0 (no interior optimum)."""
    c = channel_noise(channel)
    if c == 0.0:
        return None
    return math.sqrt(g) * (c / (c + squeezed_variance(r))) ** 0.25
