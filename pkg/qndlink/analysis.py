"""Noise metrics and entanglement witness for qndlink.

Compares protocol outputs against the ideal QND interaction, splits the
excess noise into resource- and channel-induced parts, and evaluates the
Duan separability witness on two-mode states.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from qndlink.state import V0, GaussianState

# Output register is (A, B): rows x_A, p_A, x_B, p_B.
_XA, _PA, _XB, _PB = 0, 1, 2, 3

SPECTATOR_TOL = 1e-12


# ---------------------------------------------------------------------------
# Result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseReport:
    """Excess quadrature variances of a protocol output over the ideal QND output."""

    added_var_pa: float
    added_var_xb: float
    added_var_pb: float
    resource_pa: float
    resource_xb: float
    resource_pb: float
    channel_pa: float
    channel_xb: float
    channel_pb: float
    spectators_intact: bool = True

    @property
    def metric(self) -> float:
        """Channel-induced noise summed over P'_A and X'_B."""
        return self.channel_pa + self.channel_xb

    @property
    def total_channel(self) -> float:
        """Channel-induced noise over every corrupted quadrature, P'_B included."""
        return self.channel_pa + self.channel_xb + self.channel_pb


@dataclass(frozen=True)
class DuanReport:
    """Unit-weight Duan witness of a two-mode state."""

    value: float
    bound: float
    signs: str

    @property
    def entangled(self) -> bool:
        return self.value < self.bound - 1e-12


# ---------------------------------------------------------------------------
# Noise decomposition
# ---------------------------------------------------------------------------

def _excess(output: GaussianState, ideal: GaussianState) -> np.ndarray:
    if output.n_modes != 2 or ideal.n_modes != 2:
        raise ValueError(
            f"Noise reports compare two-mode (A, B) registers, got {output.n_modes} and {ideal.n_modes} modes"
        )
    return np.diag(output.cov - ideal.cov)


def added_noise_report(
    output: GaussianState,
    ideal: GaussianState,
    *,
    channel_free: Optional[GaussianState] = None,
    idealize_resources: bool = False,
    check_spectators: bool = True,
) -> NoiseReport:
    """Project the excess covariance of *output* onto Var(P_A), Var(X_B), Var(P_B).

    *channel_free* is the same protocol run without the channel; the
    difference to it is the channel part, the rest is the resource part.
    Without it the whole excess is attributed to the resource.
    With *idealize_resources* the resource parts are set to zero and the
    totals reduce to the channel parts.
    """
    total = _excess(output, ideal)
    resource = _excess(channel_free, ideal) if channel_free is not None else total
    channel = total - resource
    if idealize_resources:
        total, resource = channel, np.zeros(4)

    spectators_intact = True
    if check_spectators:
        scale = max(1.0, float(np.max(np.abs(ideal.cov))))
        spectators_intact = bool(
            abs(total[_XA]) <= SPECTATOR_TOL * scale and abs(total[_PB]) <= SPECTATOR_TOL * scale
        )

    return NoiseReport(
        added_var_pa=float(total[_PA]),
        added_var_xb=float(total[_XB]),
        added_var_pb=float(total[_PB]),
        resource_pa=float(resource[_PA]),
        resource_xb=float(resource[_XB]),
        resource_pb=float(resource[_PB]),
        channel_pa=float(channel[_PA]),
        channel_xb=float(channel[_XB]),
        channel_pb=float(channel[_PB]),
        spectators_intact=spectators_intact,
    )


def channel_noise_metric(report: NoiseReport) -> float:
    """Scalar comparison metric: channel parts of P'_A and X'_B."""
    return report.metric


# ---------------------------------------------------------------------------
# Entanglement witness
# ---------------------------------------------------------------------------

_DUAN_COMBINATIONS = {
    "x+p-": (np.array([1.0, 0.0, 1.0, 0.0]), np.array([0.0, 1.0, 0.0, -1.0])),
    "x-p+": (np.array([1.0, 0.0, -1.0, 0.0]), np.array([0.0, 1.0, 0.0, 1.0])),
}


def duan_criterion(state: GaussianState) -> DuanReport:
    """Evaluate Var(X1 ± X2) + Var(P1 ∓ P2) against the separable bound 4·V0.

    Both sign conventions are related by a local pi phase shift on mode 2,
    so each is a valid witness; the smaller value is reported.
    """
    if state.n_modes != 2:
        raise ValueError(f"Duan criterion needs a two-mode state, got {state.n_modes} modes")
    values = {
        signs: float(u @ state.cov @ u + v @ state.cov @ v)
        for signs, (u, v) in _DUAN_COMBINATIONS.items()
    }
    signs = min(values, key=values.__getitem__)
    return DuanReport(value=values[signs], bound=4 * V0, signs=signs)
