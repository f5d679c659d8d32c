"""Protocols for qndlink.

End-to-end wiring of the QND interaction at a distance:

- ``fig1``: Bob's squeezed ancilla C crosses a single quantum channel,
  one-way classical feedforward back to Bob;
- ``fig2``: a shared EPR pair, local couplings, two-way classical exchange;
- ``classical``: the fig2 wiring with vacuum ancillas;
- ``teleport``: Bob teleports B to Alice, she couples locally, then
  teleports it back;
- ``ideal``: the local QND coupling itself, the reference for all others.

Each protocol is built as a :class:`~qndlink.circuit.Circuit` and run
exactly (ensemble mode) and optionally by trajectory sampling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import minimize_scalar

from qndlink.analysis import NoiseReport, added_noise_report
from qndlink.channel import ChannelModel
from qndlink.circuit import (
    Channel,
    Circuit,
    Gate,
    MeasureFeedforward,
    Relabel,
    TranscriptEntry,
    run_ensemble,
)
from qndlink.closed_form import fig1_added_noise
from qndlink.measurement import FeedforwardRule, QuadratureSelector
from qndlink.oracle import EmpiricalMoments, run_circuit_trajectories
from qndlink.state import (
    GaussianState,
    Quadrature,
    epr_pair,
    product,
    require_physical,
    squeezed_vacuum,
    vacuum,
)
from qndlink.symplectic import (
    SymplecticMap,
    apply,
    balanced_beam_splitter,
    compose,
    embed,
    qnd_coupling,
    qnd_sign_flipped,
)

logger = logging.getLogger(__name__)

X, P = Quadrature.X, Quadrature.P
SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------

class ProtocolKind(str, Enum):
    """The schemes that can be simulated."""

    FIG1 = "fig1"
    FIG2 = "fig2"
    TELEPORT_BASELINE = "teleport"
    CLASSICAL_BENCHMARK = "classical"
    IDEAL_QND = "ideal"


class RunMode(str, Enum):
    """Exact outcome-averaged execution, or sampled trajectories on top of it."""

    ENSEMBLE = "ensemble"
    TRAJECTORY = "trajectory"


# ---------------------------------------------------------------------------
# Schema models
# ---------------------------------------------------------------------------

class InputSpec(BaseModel):
    """Single-mode input: a displaced, optionally squeezed vacuum."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    x: float = 0.0
    p: float = 0.0
    squeezing: float = 0.0
    axis: Quadrature = Quadrature.P

    def build(self, label: str) -> GaussianState:
        base = squeezed_vacuum(self.squeezing, self.axis, label)
        return GaussianState([self.x, self.p], base.cov, (label,))


class ProtocolConfig(BaseModel):
    """Everything one protocol run needs."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    kind: ProtocolKind
    gain_alice: float = 1.0
    gain_bob: float = 1.0
    squeezing: float = Field(default=0.0, ge=0.0)
    channel: Optional[ChannelModel] = None
    input_a: InputSpec = Field(default_factory=InputSpec)
    input_b: InputSpec = Field(default_factory=InputSpec)
    mode: RunMode = RunMode.ENSEMBLE
    seed: int = Field(default=0, ge=0)
    n_runs: int = Field(default=1_000_000, ge=2)
    idealize_resources: bool = False

    @property
    def target_gain(self) -> float:
        """Gain g = G_A·G_B of the QND interaction at a distance."""
        return self.gain_alice * self.gain_bob


# ---------------------------------------------------------------------------
# Result container
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProtocolResult:
    """Output state over (A, B), its noise report and the applied steps."""

    config: ProtocolConfig
    output: GaussianState
    noise_report: NoiseReport
    transcript: list[TranscriptEntry]
    empirical: Optional[EmpiricalMoments] = None


@dataclass(frozen=True)
class GainSplit:
    """Optimal local gains for a target gain and the resulting added noise."""

    gain_alice: float
    gain_bob: float
    added_noise: float


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------

def _sel(mode: str, axis: Quadrature) -> QuadratureSelector:
    return QuadratureSelector(mode, axis)


def _feedforward(source: str, axis: Quadrature, target: str, target_axis: Quadrature, gain: float) -> MeasureFeedforward:
    return MeasureFeedforward(FeedforwardRule(_sel(source, axis), ((_sel(target, target_axis), gain),)))


def _channel_steps(config: ProtocolConfig, mode: str) -> tuple[Channel, ...]:
    return (Channel(mode, config.channel),) if config.channel is not None else ()


def _inputs(config: ProtocolConfig) -> GaussianState:
    return product(config.input_a.build("A"), config.input_b.build("B"))


def _ideal_circuit(config: ProtocolConfig) -> Circuit:
    g = config.target_gain
    return Circuit(
        _inputs(config),
        (Gate(qnd_coupling(g), ("A", "B"), {"g": g}),),
        ("A", "B"),
    )


def _fig1_circuit(config: ProtocolConfig) -> Circuit:
    ga, gb = config.gain_alice, config.gain_bob
    initial = product(_inputs(config), squeezed_vacuum(config.squeezing, P, "C"))
    steps = (
        Gate(qnd_sign_flipped(gb), ("B", "C"), {"G": gb}),
        *_channel_steps(config, "C"),
        Gate(qnd_coupling(ga), ("A", "C"), {"g": ga}),
        _feedforward("C", X, "B", X, gb),
    )
    return Circuit(initial, steps, ("A", "B"))


def _shared_pair_circuit(config: ProtocolConfig, resource: GaussianState) -> Circuit:
    ga, gb = config.gain_alice, config.gain_bob
    steps = (
        # the source sits with Bob; mode One travels to Alice
        *_channel_steps(config, "One"),
        Gate(qnd_coupling(ga), ("A", "One"), {"g": ga}),
        Gate(qnd_coupling(gb), ("Two", "B"), {"g": gb}),
        _feedforward("One", X, "B", X, gb),
        _feedforward("Two", P, "A", P, ga),
    )
    return Circuit(product(_inputs(config), resource), steps, ("A", "B"))


def _teleport_steps(config: ProtocolConfig, payload: str, sender: str, receiver: str) -> tuple:
    """Teleport *payload* using the pair (sender, receiver); receiver's half travels."""
    return (
        *_channel_steps(config, receiver),
        Gate(balanced_beam_splitter(), (payload, sender)),
        _feedforward(payload, X, receiver, X, SQRT2),
        _feedforward(sender, P, receiver, P, SQRT2),
    )


def _teleport_circuit(config: ProtocolConfig) -> Circuit:
    g = config.target_gain
    r = config.squeezing
    initial = product(_inputs(config), epr_pair(r, ("One", "Two")), epr_pair(r, ("Three", "Four")))
    steps = (
        *_teleport_steps(config, "B", "One", "Two"),
        Gate(qnd_coupling(g), ("A", "Two"), {"g": g}),
        *_teleport_steps(config, "Two", "Three", "Four"),
        Relabel({"Four": "B"}),
    )
    return Circuit(initial, steps, ("A", "B"))


def build_circuit(config: ProtocolConfig) -> Circuit:
    """Wire the circuit for *config*."""
    if config.kind is ProtocolKind.FIG1:
        return _fig1_circuit(config)
    if config.kind is ProtocolKind.FIG2:
        return _shared_pair_circuit(config, epr_pair(config.squeezing, ("One", "Two")))
    if config.kind is ProtocolKind.CLASSICAL_BENCHMARK:
        return _shared_pair_circuit(config, vacuum(2, ("One", "Two")))
    if config.kind is ProtocolKind.TELEPORT_BASELINE:
        return _teleport_circuit(config)
    return _ideal_circuit(config)


def fig1_joint_map(gain_alice: float, gain_bob: float) -> SymplecticMap:
    """Joint map on (A, B, C) after both local couplings, before the measurement."""
    bob = embed(qnd_sign_flipped(gain_bob), (1, 2), 3)
    alice = embed(qnd_coupling(gain_alice), (0, 2), 3)
    return compose(alice, bob)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def ideal_qnd_reference(g: float, input_a: GaussianState, input_b: GaussianState) -> GaussianState:
    """Local QND coupling with gain *g* applied to input_a ⊗ input_b."""
    a = GaussianState(input_a.mean, input_a.cov, ("A",))
    b = GaussianState(input_b.mean, input_b.cov, ("B",))
    return apply(product(a, b), qnd_coupling(g))


def _execute(config: ProtocolConfig, workers: int) -> ProtocolResult:
    circuit = build_circuit(config)
    output = require_physical(run_ensemble(circuit), f"{config.kind.value} output")
    ideal = ideal_qnd_reference(config.target_gain, config.input_a.build("A"), config.input_b.build("B"))

    channel_free = None
    if config.channel is not None:
        channel_free = run_ensemble(build_circuit(config.model_copy(update={"channel": None})))

    report = added_noise_report(
        output,
        ideal,
        channel_free=channel_free,
        idealize_resources=config.idealize_resources,
        check_spectators=config.kind is not ProtocolKind.TELEPORT_BASELINE,
    )
    if not report.spectators_intact:
        logger.warning("%s: X'_A or P'_B deviates from the ideal QND output", config.kind.value)

    empirical, outcomes = None, None
    if config.mode is RunMode.TRAJECTORY:
        run = run_circuit_trajectories(circuit, config.n_runs, config.seed, workers)
        empirical, outcomes = run.moments, run.outcomes

    logger.debug("%s finished: metric %.6g", config.kind.value, report.metric)
    return ProtocolResult(config, output, report, circuit.transcript(outcomes), empirical)


def _require_kind(config: ProtocolConfig, kind: ProtocolKind) -> None:
    if config.kind is not kind:
        raise ValueError(f"Expected a {kind.value} config, got {config.kind.value}")


def run_fig1(config: ProtocolConfig, *, workers: int = 1) -> ProtocolResult:
    """Single quantum channel plus one-way classical feedforward."""
    _require_kind(config, ProtocolKind.FIG1)
    return _execute(config, workers)


def run_fig2(config: ProtocolConfig, *, workers: int = 1) -> ProtocolResult:
    """Shared EPR pair plus two-way classical feedforward."""
    _require_kind(config, ProtocolKind.FIG2)
    return _execute(config, workers)


def run_classical_benchmark(config: ProtocolConfig, *, workers: int = 1) -> ProtocolResult:
    """The fig2 wiring with both ancillas in the vacuum; config.squeezing is ignored."""
    _require_kind(config, ProtocolKind.CLASSICAL_BENCHMARK)
    return _execute(config, workers)


def run_teleport_baseline(config: ProtocolConfig, *, workers: int = 1) -> ProtocolResult:
    """Teleport B to Alice, couple with gain G_A·G_B, teleport it back."""
    _require_kind(config, ProtocolKind.TELEPORT_BASELINE)
    return _execute(config, workers)


def run_ideal_qnd(config: ProtocolConfig, *, workers: int = 1) -> ProtocolResult:
    _require_kind(config, ProtocolKind.IDEAL_QND)
    return _execute(config, workers)


_RUNNERS = {
    ProtocolKind.FIG1: run_fig1,
    ProtocolKind.FIG2: run_fig2,
    ProtocolKind.CLASSICAL_BENCHMARK: run_classical_benchmark,
    ProtocolKind.TELEPORT_BASELINE: run_teleport_baseline,
    ProtocolKind.IDEAL_QND: run_ideal_qnd,
}


def run_protocol(config: ProtocolConfig, *, workers: int = 1) -> ProtocolResult:
    """Dispatch on config.kind."""
    return _RUNNERS[config.kind](config, workers=workers)


def optimize_gain_split(
    g: float,
    r: float,
    channel: Optional[ChannelModel] = None,
    kind: ProtocolKind = ProtocolKind.FIG1,
    *,
    symmetric: bool = False,
    bounds: Optional[tuple[float, float]] = None,
) -> GainSplit:
    """Split target gain *g* into G_A·G_B minimizing added Var(P'_A) + Var(X'_B).

    Searches G_A over *bounds* (default [g·1e-3, g·1e3]) on a log scale by
    bounded scalar minimization to relative tolerance 1e-6; the interval
    ends are always considered, so a monotone objective returns an end.
    """
    if not (math.isfinite(g) and g > 0):
        raise ValueError(f"Target gain must be positive, got {g}")
    if kind is not ProtocolKind.FIG1:
        raise ValueError(f"Gain-split optimization is defined for fig1, got {kind.value}")
    low, high = bounds if bounds is not None else (g * 1e-3, g * 1e3)
    if not 0 < low < high:
        raise ValueError(f"Invalid gain bounds: ({low}, {high})")

    def added(gain_alice: float) -> float:
        pa, xb = fig1_added_noise(gain_alice, g / gain_alice, r, channel)
        return pa + xb

    if symmetric:
        gain_alice = math.sqrt(g)
    else:
        found = minimize_scalar(
            lambda t: added(math.exp(t)),
            bounds=(math.log(low), math.log(high)),
            method="bounded",
            options={"xatol": 1e-6},
        )
        gain_alice = min((low, math.exp(found.x), high), key=added)

    logger.debug("gain split for g=%g: G_A=%.6g", g, gain_alice)
    return GainSplit(gain_alice, g / gain_alice, added(gain_alice))
