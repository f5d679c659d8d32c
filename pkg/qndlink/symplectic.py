"""Symplectic maps for qndlink.

Constructors for every Gaussian unitary the protocols use (QND couplings,
phase shifts, squeezers, beam splitters), plus embedding, composition and
application to states. All matrices act on interleaved quadratures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from qndlink.state import GaussianState, ModeRef, quadrature_indices, symplectic_form

#: Bound on ||S Omega S^T - Omega||, relative to max(1, max|S|^2).
MAP_TOL = 1e-12


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

def symplectic_error(matrix: np.ndarray) -> float:
    """Return ||S Omega S^T - Omega||_inf (entrywise max)."""
    omega = symplectic_form(matrix.shape[0] // 2)
    return float(np.max(np.abs(matrix @ omega @ matrix.T - omega)))


@dataclass(frozen=True, eq=False)
class SymplecticMap:
    """Linear quadrature map S with S·Omega·S^T = Omega, checked on construction."""

    matrix: np.ndarray
    name: str = "map"

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
            raise ValueError(f"Symplectic matrix must be square with even dimension, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError(f"{self.name}: matrix entries must be finite")
        scale = max(1.0, float(np.max(np.abs(matrix)))) ** 2
        error = symplectic_error(matrix)
        if error > MAP_TOL * scale:
            raise ValueError(f"{self.name}: matrix is not symplectic (error {error:.3e})")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    @classmethod
    def identity(cls, n_modes: int) -> SymplecticMap:
        return cls(np.eye(2 * n_modes), name="identity")

    def inverse(self) -> SymplecticMap:
        """S^{-1} = -Omega S^T Omega."""
        omega = symplectic_form(self.n_modes)
        return SymplecticMap(-omega @ self.matrix.T @ omega, name=f"{self.name}^-1")


@dataclass(frozen=True, eq=False)
class Displacement:
    """Phase-space translation by *offset*."""

    offset: np.ndarray

    def __post_init__(self) -> None:
        offset = np.array(self.offset, dtype=float).reshape(-1)
        if offset.size == 0 or offset.size % 2:
            raise ValueError(f"Displacement length must be even and positive, got {offset.size}")
        if not np.all(np.isfinite(offset)):
            raise ValueError("Displacement entries must be finite")
        offset.setflags(write=False)
        object.__setattr__(self, "offset", offset)

    @property
    def n_modes(self) -> int:
        return self.offset.size // 2


# ---------------------------------------------------------------------------
# Gaussian unitaries
# ---------------------------------------------------------------------------

def qnd_coupling(g: float) -> SymplecticMap:
    """QND coupling generated by X_A·P_B; mode 0 is A, mode 1 is B.

    X'_A = X_A, P'_A = P_A - g·P_B, X'_B = X_B + g·X_A, P'_B = P_B.
    """
    g = _require_finite("QND gain", g)
    return SymplecticMap(
        np.array([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, -g],
            [g, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]),
        name="qnd_coupling",
    )


def phase_shift(theta: float) -> SymplecticMap:
    """Rotation of (X, P) by *theta*; theta = pi negates both quadratures."""
    theta = _require_finite("Phase", theta)
    c, s = math.cos(theta), math.sin(theta)
    return SymplecticMap(np.array([[c, -s], [s, c]]), name="phase_shift")


def qnd_sign_flipped(gain: float) -> SymplecticMap:
    """QND coupling sandwiched between two pi phase shifts on the ancilla.

    Mode 0 is B, mode 1 is C:
    X'_C = X_C, P'_C = P_C + G·P_B, X'_B = X_B - G·X_C, P'_B = P_B.
    """
    gain = _require_finite("QND gain", gain)
    return SymplecticMap(
        np.array([
            [1.0, 0.0, -gain, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, gain, 0.0, 1.0],
        ]),
        name="qnd_sign_flipped",
    )


def squeezer(r: float) -> SymplecticMap:
    """Single-mode squeezer diag(e^r, e^-r)."""
    r = _require_finite("Squeezing parameter", r)
    return SymplecticMap(np.diag([math.exp(r), math.exp(-r)]), name="squeezer")


def balanced_beam_splitter() -> SymplecticMap:
    """50:50 mixer: X'_1 = (X_1+X_2)/√2, X'_2 = (X_1-X_2)/√2, same for P."""
    h = 1.0 / math.sqrt(2.0)
    return SymplecticMap(
        np.array([
            [h, 0.0, h, 0.0],
            [0.0, h, 0.0, h],
            [h, 0.0, -h, 0.0],
            [0.0, h, 0.0, -h],
        ]),
        name="balanced_beam_splitter",
    )


def two_mode_squeezer(r: float) -> SymplecticMap:
    """Direct two-mode squeezer producing the same EPR state as beam-splitter mixing."""
    r = _require_finite("Squeezing parameter", r)
    ch, sh = math.cosh(r), math.sinh(r)
    return SymplecticMap(
        np.array([
            [ch, 0.0, -sh, 0.0],
            [0.0, ch, 0.0, sh],
            [-sh, 0.0, ch, 0.0],
            [0.0, sh, 0.0, ch],
        ]),
        name="two_mode_squeezer",
    )


# ---------------------------------------------------------------------------
# Structure
# ---------------------------------------------------------------------------

def embed(op: SymplecticMap, target_modes: Sequence[int], n_total: int) -> SymplecticMap:
    """Act as *op* on *target_modes* (in order) and as identity elsewhere."""
    targets = [int(t) for t in target_modes]
    if len(targets) != op.n_modes:
        raise ValueError(f"{op.name} acts on {op.n_modes} modes, got targets {targets}")
    if len(set(targets)) != len(targets):
        raise ValueError(f"Duplicate target modes: {targets}")
    if any(not 0 <= t < n_total for t in targets):
        raise ValueError(f"Target modes {targets} out of range for {n_total} modes")

    idx = [q for t in targets for q in quadrature_indices(t)]
    matrix = np.eye(2 * n_total)
    matrix[np.ix_(idx, idx)] = op.matrix
    return SymplecticMap(matrix, name=op.name)


def compose(second: SymplecticMap, first: SymplecticMap) -> SymplecticMap:
    """The map that applies *first*, then *second*."""
    if second.n_modes != first.n_modes:
        raise ValueError(f"Cannot compose maps on {second.n_modes} and {first.n_modes} modes")
    return SymplecticMap(second.matrix @ first.matrix, name=f"{second.name}∘{first.name}")


def apply(state: GaussianState, op: Union[SymplecticMap, Displacement]) -> GaussianState:
    """Propagate *state* through a symplectic map or a displacement."""
    if op.n_modes != state.n_modes:
        raise ValueError(f"Operation acts on {op.n_modes} modes, state has {state.n_modes}")
    if isinstance(op, Displacement):
        return GaussianState(state.mean + op.offset, state.cov, state.labels)
    s = op.matrix
    return GaussianState(s @ state.mean, s @ state.cov @ s.T, state.labels)


def apply_local(state: GaussianState, op: SymplecticMap, modes: Sequence[ModeRef]) -> GaussianState:
    """Apply *op* to the named *modes* of *state*."""
    targets = [state.index_of(m) for m in modes]
    return apply(state, embed(op, targets, state.n_modes))
