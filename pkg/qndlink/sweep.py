"""Parameter sweeps and side-by-side comparison for qndlink.

Expands a :class:`SweepSpec` grid into protocol configs, evaluates them
(optionally on a thread pool), and emits one :class:`ComparisonRow` per
grid point in grid order.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, field
from itertools import product as grid_product
from typing import Annotated, Optional, TextIO

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qndlink.analysis import duan_criterion
from qndlink.channel import ChannelModel
from qndlink.protocols import (
    InputSpec,
    ProtocolConfig,
    ProtocolKind,
    ProtocolResult,
    RunMode,
    run_protocol,
)
from qndlink.state import V0

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "protocol", "G_A", "G_B", "r", "T", "noise_var",
    "var_add_PA", "var_add_XB", "resource_PA", "resource_XB",
    "channel_PA", "channel_XB", "metric", "duan_value", "duan_bound",
)

COMPARE_KINDS = (
    ProtocolKind.FIG1,
    ProtocolKind.FIG2,
    ProtocolKind.TELEPORT_BASELINE,
    ProtocolKind.CLASSICAL_BENCHMARK,
)

CROSSING_TOL = 1e-12

Squeezing = Annotated[float, Field(ge=0.0)]
Transmitivity = Annotated[float, Field(gt=0.0, le=1.0)]
NoiseVar = Annotated[float, Field(ge=0.0)]


# ---------------------------------------------------------------------------
# Schema models
# ---------------------------------------------------------------------------

class SweepSpec(BaseModel):
    """Grid of protocol runs.

    Gains are given either as a symmetric grid *gains* (G_A = G_B = G) or
    as the cartesian product of *gains_alice* and *gains_bob*.
    """

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    kinds: list[ProtocolKind] = Field(min_length=1)
    gains: Optional[list[float]] = None
    gains_alice: Optional[list[float]] = None
    gains_bob: Optional[list[float]] = None
    squeezings: list[Squeezing] = Field(default_factory=lambda: [0.0], min_length=1)
    transmitivities: list[Transmitivity] = Field(default_factory=lambda: [1.0], min_length=1)
    noise_vars: list[NoiseVar] = Field(default_factory=lambda: [2 * V0], min_length=1)
    input_a: InputSpec = Field(default_factory=InputSpec)
    input_b: InputSpec = Field(default_factory=InputSpec)
    mode: RunMode = RunMode.ENSEMBLE
    seed: int = Field(default=0, ge=0)
    n_runs: int = Field(default=1_000_000, ge=2)
    idealize_resources: bool = False

    @model_validator(mode="after")
    def _check_gain_grid(self) -> SweepSpec:
        split = self.gains_alice is not None or self.gains_bob is not None
        if self.gains is not None and split:
            raise ValueError("Give either gains or gains_alice/gains_bob, not both")
        if split and (not self.gains_alice or not self.gains_bob):
            raise ValueError("gains_alice and gains_bob must both be non-empty")
        if not split and not self.gains:
            raise ValueError("Gain grid is empty")
        return self

    def gain_pairs(self) -> list[tuple[float, float]]:
        if self.gains is not None:
            return [(g, g) for g in self.gains]
        return list(grid_product(self.gains_alice, self.gains_bob))

    def configs(self) -> list[ProtocolConfig]:
        """Every grid point, kinds outermost, then gains, r, T, noise_var."""
        points = []
        for kind, (ga, gb), r, t, noise_var in grid_product(
            self.kinds, self.gain_pairs(), self.squeezings, self.transmitivities, self.noise_vars
        ):
            points.append(ProtocolConfig(
                kind=kind,
                gain_alice=ga,
                gain_bob=gb,
                squeezing=r,
                channel=ChannelModel(transmitivity=t, noise_var=noise_var),
                input_a=self.input_a,
                input_b=self.input_b,
                mode=self.mode,
                seed=self.seed,
                n_runs=self.n_runs,
                idealize_resources=self.idealize_resources,
            ))
        return points


# ---------------------------------------------------------------------------
# Rows
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    """One CSV row; field order is the CSV column order."""

    protocol: str
    gain_alice: float
    gain_bob: float
    squeezing: float
    transmitivity: float
    noise_var: float
    var_add_pa: float
    var_add_xb: float
    resource_pa: float
    resource_xb: float
    channel_pa: float
    channel_xb: float
    metric: float
    duan_value: float
    duan_bound: float

    @classmethod
    def from_result(cls, result: ProtocolResult) -> ComparisonRow:
        config, report = result.config, result.noise_report
        channel = config.channel
        duan = duan_criterion(result.output)
        return cls(
            protocol=config.kind.value,
            gain_alice=config.gain_alice,
            gain_bob=config.gain_bob,
            squeezing=config.squeezing,
            transmitivity=channel.transmitivity if channel is not None else 1.0,
            noise_var=channel.noise_var if channel is not None else 2 * V0,
            var_add_pa=report.added_var_pa,
            var_add_xb=report.added_var_xb,
            resource_pa=report.resource_pa,
            resource_xb=report.resource_xb,
            channel_pa=report.channel_pa,
            channel_xb=report.channel_xb,
            metric=report.metric,
            duan_value=duan.value,
            duan_bound=duan.bound,
        )

    def csv_fields(self) -> list[str]:
        return [v if isinstance(v, str) else format(v, ".17g") for v in astuple(self)]


def write_csv(rows: list[ComparisonRow], stream: TextIO) -> None:
    """Write header and *rows* to *stream*."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_fields())


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def run_sweep(spec: SweepSpec, *, workers: int = 1) -> list[ComparisonRow]:
    """Evaluate every grid point; rows come back in grid order."""
    configs = spec.configs()
    logger.info("sweeping %d grid point(s) with %d worker(s)", len(configs), workers)

    def evaluate(config: ProtocolConfig) -> ComparisonRow:
        return ComparisonRow.from_result(run_protocol(config))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate, configs))
    return [evaluate(config) for config in configs]


@dataclass(frozen=True)
class CrossingCheck:
    """Fig. 1 against Fig. 2 channel metric at one symmetric grid point."""

    gain: float
    squeezing: float
    transmitivity: float
    noise_var: float
    metric_fig1: float
    metric_fig2: float

    @property
    def ordering(self) -> str:
        scale = max(1.0, abs(self.metric_fig1), abs(self.metric_fig2))
        diff = self.metric_fig2 - self.metric_fig1
        if abs(diff) <= CROSSING_TOL * scale:
            return "equal"
        return "fig2 < fig1" if diff < 0 else "fig2 > fig1"


@dataclass
class ComparisonReport:
    """Rows of a compare run plus the crossing checks derived from them."""

    rows: list[ComparisonRow]
    crossings: list[CrossingCheck] = field(default_factory=list)

    @property
    def unit_gain_ok(self) -> bool:
        """Both schemes coincide wherever G = 1 was evaluated."""
        return all(c.ordering == "equal" for c in self.crossings if c.gain == 1.0)


def _crossings(rows: list[ComparisonRow]) -> list[CrossingCheck]:
    def key(row: ComparisonRow) -> tuple[float, ...]:
        return (row.gain_alice, row.gain_bob, row.squeezing, row.transmitivity, row.noise_var)

    fig2 = {key(row): row for row in rows if row.protocol == ProtocolKind.FIG2.value}
    checks = []
    for row in rows:
        if row.protocol != ProtocolKind.FIG1.value or row.gain_alice != row.gain_bob:
            continue
        other = fig2.get(key(row))
        if other is None:
            continue
        checks.append(CrossingCheck(
            gain=row.gain_alice,
            squeezing=row.squeezing,
            transmitivity=row.transmitivity,
            noise_var=row.noise_var,
            metric_fig1=row.metric,
            metric_fig2=other.metric,
        ))
    return checks


def compare(spec: SweepSpec, *, workers: int = 1) -> ComparisonReport:
    """Run fig1, fig2, teleport and classical on the grid of *spec*."""
    shared = spec.model_copy(update={"kinds": list(COMPARE_KINDS)})
    rows = run_sweep(shared, workers=workers)
    return ComparisonReport(rows, _crossings(rows))
