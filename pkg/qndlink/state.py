"""Phase-space core for qndlink.

Gaussian states of N modes described by a mean vector and a covariance
matrix over interleaved quadratures (x1, p1, x2, p2, ...), the symplectic
form, physicality checks and the resource-state factories used by every
protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

import numpy as np


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

#: Vacuum variance of each quadrature (hbar = 1).
V0 = 0.5

SYMMETRY_TOL = 1e-10
PHYSICALITY_TOL = 1e-9

ModeRef = Union[str, int]


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------

class Quadrature(str, Enum):
    """Quadrature axis of a single mode."""

    X = "x"
    P = "p"

    @property
    def offset(self) -> int:
        """Position of this quadrature inside a mode's (x, p) block."""
        return 0 if self is Quadrature.X else 1


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def symplectic_form(n_modes: int) -> np.ndarray:
    """Return Omega for *n_modes* modes in interleaved ordering."""
    if n_modes < 1:
        raise ValueError(f"Mode count must be positive, got {n_modes}")
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def quadrature_indices(mode_index: int) -> list[int]:
    """Return the (x, p) vector positions of mode *mode_index*."""
    return [2 * mode_index, 2 * mode_index + 1]


def _scale(matrix: np.ndarray) -> float:
    return max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0


def _default_labels(n_modes: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n_modes))


# ---------------------------------------------------------------------------
# GaussianState
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GaussianState:
    """Immutable Gaussian state: first and second moments plus mode labels.

    The covariance is symmetrized on construction; asymmetry above
    ``SYMMETRY_TOL`` (relative to the largest entry) is rejected.
    Physicality is not enforced here so that unphysical matrices can still
    be inspected with :func:`check_physicality`.
    """

    mean: np.ndarray
    cov: np.ndarray
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)

        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"Covariance must be square, got shape {cov.shape}")
        dim = cov.shape[0]
        if dim == 0 or dim % 2:
            raise ValueError(f"Covariance dimension must be even and positive, got {dim}")
        if mean.shape != (dim,):
            raise ValueError(f"Mean has length {mean.size}, expected {dim}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("State moments must be finite")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * _scale(cov):
            raise ValueError("Covariance matrix is not symmetric")

        cov = 0.5 * (cov + cov.T)
        mean.setflags(write=False)
        cov.setflags(write=False)

        labels = tuple(self.labels) if self.labels else _default_labels(dim // 2)
        if len(labels) != dim // 2:
            raise ValueError(f"Expected {dim // 2} labels, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise ValueError(f"Mode labels must be unique: {labels}")

        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "labels", labels)

    @property
    def n_modes(self) -> int:
        return self.cov.shape[0] // 2

    def index_of(self, mode: ModeRef) -> int:
        """Resolve a label or a raw index to a mode position."""
        if isinstance(mode, str):
            try:
                return self.labels.index(mode)
            except ValueError:
                raise ValueError(f"Unknown mode label: {mode!r} (have {self.labels})") from None
        index = int(mode)
        if not 0 <= index < self.n_modes:
            raise ValueError(f"Mode index {index} out of range for {self.n_modes} modes")
        return index

    def quadrature(self, mode: ModeRef, axis: Quadrature) -> int:
        """Vector position of quadrature *axis* of *mode*."""
        return 2 * self.index_of(mode) + Quadrature(axis).offset

    def variance(self, mode: ModeRef, axis: Quadrature) -> float:
        i = self.quadrature(mode, axis)
        return float(self.cov[i, i])

    def expectation(self, mode: ModeRef, axis: Quadrature) -> float:
        return float(self.mean[self.quadrature(mode, axis)])

    def reduced(self, modes: Sequence[ModeRef]) -> GaussianState:
        """Marginal state of *modes*, in the given order."""
        positions = [self.index_of(m) for m in modes]
        if len(set(positions)) != len(positions):
            raise ValueError(f"Duplicate modes in {modes}")
        idx = [q for p in positions for q in quadrature_indices(p)]
        return GaussianState(
            self.mean[idx],
            self.cov[np.ix_(idx, idx)],
            tuple(self.labels[p] for p in positions),
        )

    def relabel(self, mapping: dict[str, str]) -> GaussianState:
        labels = tuple(mapping.get(label, label) for label in self.labels)
        return GaussianState(self.mean, self.cov, labels)

    def tensor(self, other: GaussianState) -> GaussianState:
        """Product state self ⊗ other."""
        dim_a, dim_b = self.cov.shape[0], other.cov.shape[0]
        cov = np.zeros((dim_a + dim_b, dim_a + dim_b))
        cov[:dim_a, :dim_a] = self.cov
        cov[dim_a:, dim_a:] = other.cov
        return GaussianState(
            np.concatenate([self.mean, other.mean]),
            cov,
            self.labels + other.labels,
        )


def product(*states: GaussianState) -> GaussianState:
    """Tensor product of one or more states, labels concatenated."""
    if not states:
        raise ValueError("product() needs at least one state")
    result = states[0]
    for state in states[1:]:
        result = result.tensor(state)
    return result


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------

def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def vacuum(n: int, labels: Optional[Iterable[str]] = None) -> GaussianState:
    """Ground state of *n* modes: zero mean, covariance V0 · I."""
    if n < 1:
        raise ValueError(f"Mode count must be at least 1, got {n}")
    return GaussianState(np.zeros(2 * n), V0 * np.eye(2 * n), tuple(labels or ()))


def coherent(x: float, p: float, label: str = "0") -> GaussianState:
    """Displaced vacuum with quadrature means (x, p)."""
    mean = [_require_finite("x", x), _require_finite("p", p)]
    return GaussianState(np.array(mean), V0 * np.eye(2), (label,))


def squeezed_vacuum(
    r: float,
    axis: Quadrature = Quadrature.P,
    label: str = "0",
) -> GaussianState:
    """Single-mode squeezed vacuum, squeezed along *axis*.

    A p-squeezed state has covariance diag(V0·e^{2r}, V0·e^{-2r}).
    """
    r = _require_finite("Squeezing parameter", r)
    wide, narrow = V0 * math.exp(2 * r), V0 * math.exp(-2 * r)
    diag = [wide, narrow] if Quadrature(axis) is Quadrature.P else [narrow, wide]
    return GaussianState(np.zeros(2), np.diag(diag), (label,))


def epr_pair(r: float, labels: tuple[str, str] = ("One", "Two")) -> GaussianState:
    """Two-mode EPR state with reduced Var(X1+X2) and Var(P1-P2).

    Built by mixing an x-squeezed and a p-squeezed vacuum on a balanced
    beam splitter; both EPR variances equal 2·V0·e^{-2r}.
    """
    from qndlink.symplectic import apply, balanced_beam_splitter

    first, second = labels
    inputs = product(
        squeezed_vacuum(r, Quadrature.X, first),
        squeezed_vacuum(r, Quadrature.P, second),
    )
    return apply(inputs, balanced_beam_splitter())


# ---------------------------------------------------------------------------
# Physicality
# ---------------------------------------------------------------------------

def symplectic_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """Symplectic spectrum of *cov*, one value per mode, descending.

    Raises ValueError for odd dimension or an asymmetric matrix.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
        raise ValueError(f"Covariance must be square with even dimension, got {cov.shape}")
    if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL * _scale(cov):
        raise ValueError("Covariance matrix is not symmetric")

    omega = symplectic_form(cov.shape[0] // 2)
    spectrum = np.sort(np.abs(np.linalg.eigvals(omega @ cov)))[::-1]
    # eigenvalues come in +-i*nu pairs
    return spectrum[::2].copy()


@dataclass(frozen=True)
class PhysicalityReport:
    """Outcome of a physicality check."""

    ok: bool
    margin: float
    tolerance: float = PHYSICALITY_TOL


def check_physicality(state: GaussianState) -> PhysicalityReport:
    """Pass iff every symplectic eigenvalue is at least V0 minus the tolerance.

    The margin is the smallest symplectic eigenvalue minus V0. The tolerance
    is PHYSICALITY_TOL times max(1, max|cov|): rounding in the spectrum of
    a strongly squeezed covariance grows with its largest entry.
    """
    tolerance = PHYSICALITY_TOL * _scale(state.cov)
    margin = float(np.min(symplectic_eigenvalues(state.cov))) - V0
    return PhysicalityReport(ok=margin >= -tolerance, margin=margin, tolerance=tolerance)


def require_physical(state: GaussianState, what: str = "state") -> GaussianState:
    """Return *state* unchanged, raising ValueError if it is unphysical."""
    report = check_physicality(state)
    if not report.ok:
        raise ValueError(f"Unphysical {what}: symplectic margin {report.margin:.3e}")
    return state
