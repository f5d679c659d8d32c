"""Validator module for qndlink.

Implements the ``qndlink validate`` command logic: closed-form reproduction
of every scheme, the randomized property suites, and ensemble-vs-oracle
agreement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from rich.console import Console

from qndlink.analysis import duan_criterion
from qndlink.channel import ChannelModel, apply_channel
from qndlink.closed_form import (
    classical_added_noise,
    fig1_added_noise,
    fig1_optimal_gain_alice,
    fig2_added_noise,
    teleport_output,
)
from qndlink.measurement import QuadratureSelector, condition_on_outcome
from qndlink.oracle import CHUNK_SIZE, run_circuit_trajectories
from qndlink.protocols import (
    InputSpec,
    ProtocolConfig,
    ProtocolKind,
    build_circuit,
    optimize_gain_split,
    run_protocol,
)
from qndlink.state import V0, GaussianState, Quadrature, check_physicality
from qndlink.symplectic import (
    MAP_TOL,
    SymplecticMap,
    apply,
    balanced_beam_splitter,
    compose,
    embed,
    phase_shift,
    qnd_coupling,
    qnd_sign_flipped,
    squeezer,
    symplectic_error,
    two_mode_squeezer,
)

console = Console()

GAINS = (0.5, 1.0, 2.0)
SQUEEZINGS = (0.0, 1.0, 3.0, 5.0)
TRANSMITIVITIES = (0.6, 0.8, 0.95)
RELATIVE_TOL = 1e-12
PROPERTY_CASES = 1000


# ---------------------------------------------------------------------------
# Result container
# ---------------------------------------------------------------------------

@dataclass
class ValidationResult:
    """Aggregated result of all validation checks."""

    passed: list[str] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """Return True when every check passed."""
        return len(self.failed) == 0


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _tol(gain: float, r: float) -> float:
    """Absolute tolerance scaled to the largest covariance entry of a run."""
    return RELATIVE_TOL * max(1.0, gain**2) * math.exp(2 * r)


def _config(kind: ProtocolKind, gain: float, r: float, **extra) -> ProtocolConfig:
    return ProtocolConfig(kind=kind, gain_alice=gain, gain_bob=gain, squeezing=r, **extra)


def _sandwich(gain: float) -> SymplecticMap:
    """Pi phase shifts on the ancilla around a QND coupling, modes (B, C)."""
    flip = embed(phase_shift(math.pi), (1,), 2)
    coupling = embed(qnd_coupling(gain), (1, 0), 2)
    return compose(flip, compose(coupling, flip))


def random_map(rng: np.random.Generator, n_modes: int, depth: int = 4) -> SymplecticMap:
    """Product of *depth* random gates embedded on random modes."""
    result = SymplecticMap.identity(n_modes)
    for _ in range(depth):
        choice = int(rng.integers(5)) if n_modes > 1 else int(rng.integers(2))
        if choice == 0:
            op = phase_shift(rng.uniform(0, 2 * math.pi))
        elif choice == 1:
            op = squeezer(rng.uniform(-1, 1))
        elif choice == 2:
            op = qnd_coupling(rng.uniform(-2, 2))
        elif choice == 3:
            op = balanced_beam_splitter()
        else:
            op = two_mode_squeezer(rng.uniform(-1, 1))
        targets = rng.choice(n_modes, size=op.n_modes, replace=False)
        result = compose(embed(op, targets, n_modes), result)
    return result


def random_state(rng: np.random.Generator, n_modes: int) -> GaussianState:
    """Random thermal product state pushed through a random map, with a random mean."""
    occupation = 1.0 + rng.uniform(0, 1, n_modes)
    cov = V0 * np.diag(np.repeat(occupation, 2))
    thermal = GaussianState(rng.normal(0, 1, 2 * n_modes), cov)
    return apply(thermal, random_map(rng, n_modes))


# ---------------------------------------------------------------------------
# Individual checks
# ---------------------------------------------------------------------------

def check_sandwich_identity() -> tuple[bool, str]:
    """Sign-flipped coupling equals the phase-shift sandwich entrywise.

    Returns (passed, message).
    """
    gains = (0.1, 0.5, 1.0, 2.0, 10.0)
    worst = max(float(np.max(np.abs(qnd_sign_flipped(g).matrix - _sandwich(g).matrix))) for g in gains)
    if worst <= 1e-14:
        return True, f"Sign-flipped QND sandwich identity holds (max error {worst:.1e})"
    return False, f"Sign-flipped QND sandwich identity broken (max error {worst:.1e})"


def _resource_check(kind: ProtocolKind, expected: Callable[[float, float], tuple[float, float]]) -> list[str]:
    failures = []
    for gain in GAINS:
        previous = math.inf
        for r in SQUEEZINGS:
            result = run_protocol(_config(kind, gain, r))
            report, output = result.noise_report, result.output
            want_pa, want_xb = expected(gain, r)
            tol = _tol(gain, r)
            if abs(report.added_var_pa - want_pa) > tol or abs(report.added_var_xb - want_xb) > tol:
                failures.append(
                    f"G={gain} r={r}: added ({report.added_var_pa:.6g}, {report.added_var_xb:.6g}),"
                    f" expected ({want_pa:.6g}, {want_xb:.6g})"
                )
            transfer = output.cov[2, 0] / V0
            if abs(transfer - gain**2) > tol / V0:
                failures.append(f"G={gain} r={r}: X_A→X'_B gain {transfer:.6g}, expected {gain**2:.6g}")
            if not report.spectators_intact:
                failures.append(f"G={gain} r={r}: X'_A or P'_B disturbed")
            total = report.added_var_pa + report.added_var_xb
            if total >= previous and total > tol:
                failures.append(f"G={gain}: added noise not decreasing at r={r}")
            previous = total
    return failures


def check_fig1_reproduction() -> tuple[bool, str]:
    """Single-channel scheme without a channel adds G²·V0·e^{-2r} to P'_A only.

    Returns (passed, message).
    """
    failures = _resource_check(ProtocolKind.FIG1, lambda g, r: fig1_added_noise(g, g, r))
    if failures:
        return False, "Fig. 1 reproduction failed: " + "; ".join(failures)
    return True, "Fig. 1 added noise G²·V0·e^{-2r} in P'_A, none in X'_B"


def check_fig2_reproduction() -> tuple[bool, str]:
    """Shared-pair scheme adds G²·2V0·e^{-2r} to both P'_A and X'_B.

    Returns (passed, message).
    """
    failures = _resource_check(ProtocolKind.FIG2, lambda g, r: fig2_added_noise(g, g, r))
    if failures:
        return False, "Fig. 2 reproduction failed: " + "; ".join(failures)
    return True, "Fig. 2 added noise G²·2V0·e^{-2r} in P'_A and X'_B"


def check_classical_floor() -> tuple[bool, str]:
    """Vacuum ancillas give exactly 2G²V0 in both corrupted quadratures.

    Returns (passed, message).
    """
    failures = []
    for gain in GAINS:
        report = run_protocol(_config(ProtocolKind.CLASSICAL_BENCHMARK, gain, 0.0)).noise_report
        want_pa, want_xb = classical_added_noise(gain, gain)
        tol = _tol(gain, 0.0)
        if abs(report.added_var_pa - want_pa) > tol or abs(report.added_var_xb - want_xb) > tol:
            failures.append(f"G={gain}: ({report.added_var_pa:.6g}, {report.added_var_xb:.6g})")
    if failures:
        return False, "Classical floor 2G²V0 not reproduced: " + "; ".join(failures)
    return True, "Classical benchmark adds 2G²V0 to both quadratures"


def check_channel_terms() -> tuple[bool, str]:
    """Idealized-resource channel parts of both schemes match their closed forms.

    Returns (passed, message).
    """
    failures = []
    for gain in GAINS:
        for t in TRANSMITIVITIES:
            channel = ChannelModel(transmitivity=t, noise_var=1.0)
            for kind, closed in (
                (ProtocolKind.FIG1, fig1_added_noise),
                (ProtocolKind.FIG2, fig2_added_noise),
            ):
                report = run_protocol(
                    _config(kind, gain, 5.0, channel=channel, idealize_resources=True)
                ).noise_report
                want = closed(gain, gain, math.inf, channel)
                tol = _tol(gain, 5.0)
                got = (report.channel_pa, report.channel_xb)
                if any(abs(a - b) > tol for a, b in zip(got, want)):
                    failures.append(f"{kind.value} G={gain} T={t}: {got}, expected {want}")
                if report.resource_pa != 0.0 or report.resource_xb != 0.0:
                    failures.append(f"{kind.value} G={gain} T={t}: resource parts not idealized")
    if failures:
        return False, "Channel noise terms failed: " + "; ".join(failures)
    return True, "Channel noise terms match (1-T²)·noise_var weighted by the local gains"


def check_crossing() -> tuple[bool, str]:
    """Fig. 1 and Fig. 2 coincide at G = 1; the ordering elsewhere is reported.

    Returns (passed, message).
    """
    channel = ChannelModel(transmitivity=0.8, noise_var=1.0)
    orderings = []
    for gain in (0.5, 1.0, 2.0):
        metrics = {
            kind: run_protocol(
                _config(kind, gain, 5.0, channel=channel, idealize_resources=True)
            ).noise_report.metric
            for kind in (ProtocolKind.FIG1, ProtocolKind.FIG2)
        }
        diff = metrics[ProtocolKind.FIG2] - metrics[ProtocolKind.FIG1]
        expected = 2 * gain**2 * channel.added_noise
        if abs(metrics[ProtocolKind.FIG2] - expected) > _tol(gain, 5.0):
            return False, f"Fig. 2 channel metric {metrics[ProtocolKind.FIG2]:.6g} at G={gain}, expected {expected:.6g}"
        if gain == 1.0 and abs(diff) > _tol(gain, 5.0):
            return False, f"Fig. 1 and Fig. 2 differ at G=1 ({diff:.3e})"
        if abs(diff) <= _tol(gain, 5.0):
            orderings.append(f"G={gain}: equal")
        else:
            orderings.append(f"G={gain}: {'fig2' if diff < 0 else 'fig1'} lower")
    return True, "Channel metrics equal at G=1 (" + ", ".join(orderings) + ")"


def check_teleport_baseline() -> tuple[bool, str]:
    """Explicit double teleportation matches the closed-form output and loses to both schemes.

    Returns (passed, message).
    """
    inputs = InputSpec()
    for r in (3.0, 5.0):
        for t in (0.8, 1.0):
            channel = ChannelModel(transmitivity=t)
            config = ProtocolConfig(
                kind=ProtocolKind.TELEPORT_BASELINE, squeezing=r, channel=channel, gain_bob=1.5
            )
            got = run_protocol(config).output.cov
            want = teleport_output(config.target_gain, r, channel, inputs.build("A"), inputs.build("B")).cov
            error = float(np.max(np.abs(got - want)))
            if error > 1e-10 * math.exp(2 * r):
                return False, f"Teleportation baseline deviates from closed form at r={r}, T={t} ({error:.3e})"

    channel = ChannelModel(transmitivity=0.8, noise_var=1.0)
    totals = {
        kind: run_protocol(
            _config(kind, 1.0, 5.0, channel=channel, idealize_resources=True)
        ).noise_report.total_channel
        for kind in (ProtocolKind.FIG1, ProtocolKind.FIG2, ProtocolKind.TELEPORT_BASELINE)
    }
    baseline = totals.pop(ProtocolKind.TELEPORT_BASELINE)
    if not all(baseline > other for other in totals.values()):
        return False, f"Teleportation baseline channel noise {baseline:.6g} does not exceed {list(totals.values())}"
    return True, f"Teleportation baseline matches closed form; channel noise {baseline:.3g} exceeds both schemes"


def check_entanglement_witness() -> tuple[bool, str]:
    """Fig. 2 entangles vacua at r ≥ 1; the classical benchmark never does.

    Returns (passed, message).
    """
    for r in (1.0, 2.0, 3.0):
        duan = duan_criterion(run_protocol(_config(ProtocolKind.FIG2, 1.0, r)).output)
        if not duan.entangled:
            return False, f"Fig. 2 at r={r} not entangled (Duan value {duan.value:.6g})"
    for gain in (0.25, 0.5, 1.0, 2.0, 4.0):
        duan = duan_criterion(run_protocol(_config(ProtocolKind.CLASSICAL_BENCHMARK, gain, 0.0)).output)
        if duan.value < duan.bound - 1e-12:
            return False, f"Classical benchmark entangled at G={gain} (Duan value {duan.value:.6g})"
    return True, "Fig. 2 entangles Alice and Bob; classical benchmark stays separable"


def check_properties(seed: int) -> tuple[bool, str]:
    """Random maps are symplectic, random states physical, conditioning shrinks covariance.

    Returns (passed, message).
    """
    rng = np.random.default_rng(seed)
    channel = ChannelModel(transmitivity=0.7)
    for case in range(PROPERTY_CASES):
        n_modes = int(rng.integers(2, 5))
        op = random_map(rng, n_modes)
        scale = max(1.0, float(np.max(np.abs(op.matrix)))) ** 2
        if symplectic_error(op.matrix) > MAP_TOL * scale:
            return False, f"Case {case}: composed map not symplectic"

        state = apply_channel(random_state(rng, n_modes), 0, channel)
        if not check_physicality(state).ok:
            return False, f"Case {case}: unphysical state (margin {check_physicality(state).margin:.3e})"

        mode = int(rng.integers(n_modes))
        sel = QuadratureSelector(state.labels[mode], Quadrature.X if rng.random() < 0.5 else Quadrature.P)
        conditioned = condition_on_outcome(state, sel, rng.normal())
        rest = [label for label in state.labels if label != sel.mode]
        shrink = np.linalg.eigvalsh(state.reduced(rest).cov - conditioned.cov)
        cov_scale = max(1.0, float(np.max(np.abs(state.cov))))
        if np.min(shrink) < -RELATIVE_TOL * cov_scale:
            return False, f"Case {case}: conditioning increased the covariance"
        if not check_physicality(conditioned).ok:
            return False, f"Case {case}: conditioned state unphysical"
    return True, f"Property suite passed over {PROPERTY_CASES} random cases"


def check_oracle_agreement(seed: int, runs: int, workers: int) -> tuple[bool, str]:
    """Sampled trajectories agree with the ensemble within 5 standard errors.

    Returns (passed, message).
    """
    worst = 0.0
    for kind in ProtocolKind:
        for r in (0.0, 1.0):
            for t in (0.8, 1.0):
                config = _config(kind, 1.0, r, channel=ChannelModel(transmitivity=t))
                circuit = build_circuit(config)
                ensemble = run_protocol(config).output
                moments = run_circuit_trajectories(circuit, runs, seed, workers).moments
                deviation = moments.deviation(ensemble.mean, ensemble.cov)
                worst = max(worst, deviation)
                if deviation > 5.0:
                    return False, f"Oracle disagrees for {kind.value} r={r} T={t} ({deviation:.2f} SE)"

    circuit = build_circuit(_config(ProtocolKind.FIG2, 1.0, 1.0))
    n = 2 * CHUNK_SIZE + 17
    serial = run_circuit_trajectories(circuit, n, seed, 1).moments
    parallel = run_circuit_trajectories(circuit, n, seed, max(2, workers)).moments
    if not (np.array_equal(serial.mean, parallel.mean) and np.array_equal(serial.cov, parallel.cov)):
        return False, "Oracle results depend on the worker count"
    return True, f"Oracle agrees with ensemble over {runs} runs (worst {worst:.2f} SE)"


def check_gain_split() -> tuple[bool, str]:
    """Fig. 1 noise grows with G_A at fixed g; the optimizer follows the closed forms.

    Returns (passed, message).
    """
    for g in (0.5, 1.0, 4.0):
        for r in (0.0, 1.0, 3.0):
            grid = np.geomspace(0.1 * math.sqrt(g), 10 * math.sqrt(g), 41)
            noise = [sum(fig1_added_noise(ga, g / ga, r)) for ga in grid]
            if not all(b > a for a, b in zip(noise, noise[1:])):
                return False, f"Added noise not increasing in G_A for g={g}, r={r}"
            split = optimize_gain_split(g, r)
            if abs(split.gain_alice - g * 1e-3) > 1e-6 * g * 1e-3:
                return False, f"Optimizer missed the lower bound for g={g}, r={r} (G_A={split.gain_alice:.6g})"

            symmetric = optimize_gain_split(g, r, symmetric=True)
            report = run_protocol(ProtocolConfig(
                kind=ProtocolKind.FIG1,
                gain_alice=symmetric.gain_alice,
                gain_bob=symmetric.gain_bob,
                squeezing=r,
            )).noise_report
            total = report.added_var_pa + report.added_var_xb
            if abs(total - symmetric.added_noise) > _tol(g, r):
                return False, f"Symmetric split disagrees with the simulation for g={g}, r={r}"

    channel = ChannelModel(transmitivity=0.8, noise_var=1.0)
    for g in (0.5, 1.0, 4.0):
        split = optimize_gain_split(g, 1.0, channel)
        expected = fig1_optimal_gain_alice(g, 1.0, channel)
        if abs(split.gain_alice - expected) > 1e-5 * expected:
            return False, f"Lossy optimum G_A={split.gain_alice:.6g} for g={g}, expected {expected:.6g}"
    return True, "Gain split favours a small G_A; lossy optimum matches closed form"


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def run_all_checks(
    *,
    seed: int = 7,
    runs: int = 1_000_000,
    workers: int = 1,
    run_oracle: bool = True,
) -> ValidationResult:
    """Execute every validation check and return an aggregated result.

    Set *run_oracle* to False to skip the (slow) trajectory comparison.
    """
    result = ValidationResult()

    checks = [
        check_sandwich_identity(),
        check_fig1_reproduction(),
        check_fig2_reproduction(),
        check_classical_floor(),
        check_channel_terms(),
        check_crossing(),
        check_teleport_baseline(),
        check_entanglement_witness(),
        check_properties(seed),
    ]
    if run_oracle:
        checks.append(check_oracle_agreement(seed, runs, workers))
    checks.append(check_gain_split())

    for passed, message in checks:
        if passed:
            result.passed.append(message)
        else:
            result.failed.append(message)

    return result


def print_result(result: ValidationResult) -> None:
    """Pretty-print a ValidationResult to the terminal."""
    for msg in result.passed:
        console.print(f"  [green]✓[/green] {msg}")
    for msg in result.failed:
        console.print(f"  [red]✗[/red] {msg}")

    if result.ok:
        console.print("\n[bold green]All checks passed.[/bold green]")
    else:
        console.print(f"\n[bold red]{len(result.failed)} check(s) failed.[/bold red]")
