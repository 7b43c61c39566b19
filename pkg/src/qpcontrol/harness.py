"""Closed-loop and fixed-QP simulation runs plus their summary metrics.

A run pairs one controller stream with one plant instance: each frame the
controller turns the previous frame's PSNR into a QP, the plant encodes,
and the outcome is appended to the trace. The fixed-QP variant holds the
rounded anchor QP and serves as the uncontrolled baseline. Every run is
deterministic in its configuration; experiments share no mutable state, so
many configurations may execute concurrently, ordered by configuration
index rather than completion time.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .controller import (
    ControllerState,
    ControlObjective,
    FrameKind,
    PidGains,
    QpRange,
    clamp_round_qp,
    compute_error,
    controller_frame,
)
from .errors import DegenerateInputError, InputDomainError
from .plant import PlantModel, step_plant

TRACE_CSV_HEADER = "frame,qp,psnr_db,bits,error,o"


class RunMode(Enum):
    CONTROLLED = "controlled"
    FIXED_QP = "fixed"


def parse_kind_pattern(pattern: str) -> Callable[[int], FrameKind]:
    """Turn a schedule pattern into a frame-index -> FrameKind map.

    Supported patterns: ``inter`` (all inter), ``intra`` (all intra) and
    ``intra_every:N`` (intra at every Nth frame starting from 0, inter
    elsewhere). Every pattern covers an unbounded frame range.
    """
    if pattern == "inter":
        return lambda t: FrameKind.INTER
    if pattern == "intra":
        return lambda t: FrameKind.INTRA
    if pattern.startswith("intra_every:"):
        tail = pattern.split(":", 1)[1]
        try:
            period = int(tail)
        except ValueError:
            raise InputDomainError(f"bad intra_every period {tail!r}") from None
        if period < 1:
            raise InputDomainError(f"intra_every period must be >= 1, got {period}")
        return lambda t: FrameKind.INTRA if t % period == 0 else FrameKind.INTER
    raise InputDomainError(
        f"unknown kind_pattern {pattern!r}; expected 'inter', 'intra' or 'intra_every:N'"
    )


@dataclass
class ExperimentConfig:
    """Everything one run needs; value-identical configs give identical runs."""

    plant: PlantModel
    objective: ControlObjective
    gains: PidGains = PidGains()
    qp_range: QpRange = QpRange()
    qp_offset: float = 32.0
    kind_pattern: str = "inter"
    n_frames: int = 300
    seed: int = 0
    mode: RunMode = RunMode.CONTROLLED

    def __post_init__(self) -> None:
        if self.n_frames < 1:
            raise InputDomainError(f"n_frames must be >= 1, got {self.n_frames}")
        if not math.isfinite(self.qp_offset):
            raise InputDomainError("qp_offset must be finite")
        parse_kind_pattern(self.kind_pattern)  # validate eagerly


@dataclass(frozen=True)
class FrameRecord:
    """One row of a run trace."""

    frame: int
    qp: int
    psnr: float
    bits: float
    error: float
    o: float


@dataclass(frozen=True)
class MetricsReport:
    """Per-run summary: setpoint accuracy, stability of quality and bits.

    Fluctuations are population standard deviations over all frames, so a
    single-frame run reports zero and a constant series reports exactly
    zero. ``bit_fluc`` and ``bitrate_mean`` are in bits per frame; multiply
    by the frame rate (and divide by 1e6) for Mbps.
    """

    avg_psnr: float
    control_error_db: float
    control_error_pct: float
    quality_fluc_db: float
    bitrate_mean: float
    bit_fluc: float

    def as_dict(self) -> dict[str, float]:
        return {
            "avg_psnr": self.avg_psnr,
            "control_error_db": self.control_error_db,
            "control_error_pct": self.control_error_pct,
            "quality_fluc_db": self.quality_fluc_db,
            "bitrate_mean": self.bitrate_mean,
            "bit_fluc": self.bit_fluc,
        }


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side metrics with the quality-fluctuation reduction."""

    controlled: MetricsReport
    baseline: MetricsReport
    fluctuation_reduction_pct: float

    def rows(self) -> list[tuple[str, MetricsReport]]:
        return [("fixed_qp", self.baseline), ("controlled", self.controlled)]


def run_closed_loop(config: ExperimentConfig) -> list[FrameRecord]:
    """Run the controller against the configured plant for ``n_frames``.

    Frame t's QP comes from the controller fed with frame t-1's PSNR; the
    recorded ``error`` is the frame's own error signal (recomputed from the
    fresh measurement) and ``o`` is the control variable that produced the
    frame's QP.
    """
    if config.mode is not RunMode.CONTROLLED:
        raise InputDomainError("run_closed_loop requires mode=controlled")
    kind_at = parse_kind_pattern(config.kind_pattern)
    plant = copy.deepcopy(config.plant)
    plant.reset()
    state = ControllerState(qp_offset=config.qp_offset)
    records: list[FrameRecord] = []
    prev_psnr: float | None = None
    for t in range(config.n_frames):
        qp = controller_frame(
            prev_psnr, kind_at(t), state, config.gains, config.objective, config.qp_range
        )
        outcome = step_plant(plant, qp, t)
        error = compute_error(outcome.psnr, prev_psnr, config.objective)
        records.append(
            FrameRecord(
                frame=t,
                qp=qp,
                psnr=outcome.psnr,
                bits=outcome.bits,
                error=error,
                o=state.last_o,
            )
        )
        prev_psnr = outcome.psnr
    return records


def run_fixed_qp(config: ExperimentConfig) -> list[FrameRecord]:
    """Baseline run: hold the rounded anchor QP, step the plant identically."""
    if config.mode is not RunMode.FIXED_QP:
        raise InputDomainError("run_fixed_qp requires mode=fixed")
    plant = copy.deepcopy(config.plant)
    plant.reset()
    qp = clamp_round_qp(config.qp_offset, config.qp_range)
    records: list[FrameRecord] = []
    prev_psnr: float | None = None
    for t in range(config.n_frames):
        outcome = step_plant(plant, qp, t)
        error = compute_error(outcome.psnr, prev_psnr, config.objective)
        records.append(
            FrameRecord(
                frame=t, qp=qp, psnr=outcome.psnr, bits=outcome.bits, error=error, o=0.0
            )
        )
        prev_psnr = outcome.psnr
    return records


def compute_metrics(
    records: Sequence[FrameRecord], objective: ControlObjective
) -> MetricsReport:
    """Summarize a trace into the six report metrics."""
    if not records:
        raise DegenerateInputError("cannot compute metrics over an empty trace")
    psnr = np.array([r.psnr for r in records], dtype=float)
    bits = np.array([r.bits for r in records], dtype=float)
    avg_psnr = float(np.mean(psnr))
    control_error_db = abs(avg_psnr - objective.target_psnr)
    return MetricsReport(
        avg_psnr=avg_psnr,
        control_error_db=control_error_db,
        control_error_pct=100.0 * control_error_db / objective.target_psnr,
        quality_fluc_db=float(np.std(psnr)),
        bitrate_mean=float(np.mean(bits)),
        bit_fluc=float(np.std(bits)),
    )


def compare(controlled: MetricsReport, baseline: MetricsReport) -> ComparisonReport:
    """Pair two reports from the same plant/disturbance/seed for the table.

    The reduction is ``100 * (baseline_fluc - controlled_fluc) /
    baseline_fluc``; swapping the arguments' roles flips its sign.
    """
    base = baseline.quality_fluc_db
    ours = controlled.quality_fluc_db
    if base == 0.0:
        reduction = 0.0 if ours == 0.0 else -math.inf
    else:
        reduction = 100.0 * (base - ours) / base
    return ComparisonReport(
        controlled=controlled, baseline=baseline, fluctuation_reduction_pct=reduction
    )


# ---------------------------------------------------------------------------
# File emission
# ---------------------------------------------------------------------------

def trace_csv_text(records: Sequence[FrameRecord]) -> str:
    """Render a trace as CSV with 6-decimal fixed-point reals."""
    lines = [TRACE_CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.frame},{r.qp},{r.psnr:.6f},{r.bits:.6f},{r.error:.6f},{r.o:.6f}"
        )
    return "\n".join(lines) + "\n"


def write_trace_csv(records: Sequence[FrameRecord], path: str | Path) -> None:
    Path(path).write_text(trace_csv_text(records))


def metrics_json_text(report: MetricsReport) -> str:
    """Render a report as a JSON object with exactly the six metric names."""
    return json.dumps(report.as_dict(), indent=2) + "\n"


def write_metrics_json(report: MetricsReport, path: str | Path) -> None:
    Path(path).write_text(metrics_json_text(report))


_COLUMNS = (
    ("avg_psnr", "avg_psnr_db"),
    ("control_error_db", "control_error_db"),
    ("control_error_pct", "control_error_pct"),
    ("quality_fluc_db", "quality_fluc_db"),
    ("bitrate_mean", "bitrate_bits_per_frame"),
    ("bit_fluc", "bit_fluc_bits_per_frame"),
)


def comparison_text(report: ComparisonReport) -> str:
    """Aligned plain-text table, one row per method, one column per metric."""
    headers = ["method"] + [title for _, title in _COLUMNS]
    table_rows = []
    for label, metrics in report.rows():
        values = [f"{getattr(metrics, name):.4f}" for name, _ in _COLUMNS]
        table_rows.append([label] + values)
    widths = [
        max(len(headers[i]), *(len(row[i]) for row in table_rows))
        for i in range(len(headers))
    ]
    def fmt_row(cells: list[str]) -> str:
        return "  ".join(cell.rjust(widths[i]) for i, cell in enumerate(cells))

    lines = [fmt_row(headers)]
    lines.extend(fmt_row(row) for row in table_rows)
    lines.append(
        f"quality fluctuation reduction: {report.fluctuation_reduction_pct:.1f}%"
    )
    return "\n".join(lines) + "\n"
