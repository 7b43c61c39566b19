"""Synthetic stand-ins for an encoder's QP-to-quality behaviour.

Three plant flavours map a per-frame QP to PSNR and bits:

* zero-order: memoryless affine response, ``psnr = c0 - c1 * qp + w``
* first-order: the same affine core blended with the previous output,
  ``psnr = alpha * prev + (1 - alpha) * (c0 - c1 * qp) + w`` (one geometric
  pole at ``alpha``)
* trace-driven: per-frame PSNR/bits tables measured elsewhere, linearly
  interpolated between tabulated QPs.

``w`` is a deterministic disturbance modelling content variation. Bits for
the synthetic flavours follow the conventional halving-per-six-QP relation.
A plant instance is sequential per stream; independent instances may run
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import InputDomainError, TraceDomainError

_MASK64 = (1 << 64) - 1

TRACE_HEADER = "frame,qp,psnr_db,bits"


class PlantKind(Enum):
    ZERO_ORDER = "zero_order"
    FIRST_ORDER = "first_order"
    TRACE_DRIVEN = "trace_driven"


class DisturbanceKind(Enum):
    NONE = "none"
    CONSTANT = "constant"
    STEP = "step"
    SINUSOID = "sinusoid"
    SEEDED_NOISE = "seeded_noise"


@dataclass(frozen=True)
class DisturbanceSpec:
    """Deterministic per-frame PSNR perturbation.

    ``amplitude`` is in dB. Sinusoids use ``period`` frames per cycle, steps
    switch on at ``step_frame``, and seeded noise draws uniform values in
    [-amplitude, amplitude] from a counter-based mix of (seed, frame), so
    equal seeds give bitwise-identical sequences.
    """

    kind: DisturbanceKind = DisturbanceKind.NONE
    amplitude: float = 0.0
    period: int = 0
    step_frame: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.amplitude):
            raise InputDomainError(f"amplitude must be finite, got {self.amplitude!r}")
        if self.kind is DisturbanceKind.SINUSOID and self.period < 1:
            raise InputDomainError(
                f"sinusoid disturbance needs period >= 1, got {self.period}"
            )


def _mix64(x: int) -> int:
    # splitmix64 finalizer: full-avalanche 64-bit mix
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def disturbance_at(spec: DisturbanceSpec, frame_index: int) -> float:
    """Disturbance value (dB) at a frame; pure in (spec, frame_index)."""
    if frame_index < 0:
        raise InputDomainError("frame_index must be nonnegative")
    kind = spec.kind
    if kind is DisturbanceKind.NONE:
        return 0.0
    if kind is DisturbanceKind.CONSTANT:
        return spec.amplitude
    if kind is DisturbanceKind.STEP:
        return spec.amplitude if frame_index >= spec.step_frame else 0.0
    if kind is DisturbanceKind.SINUSOID:
        return spec.amplitude * math.sin(2.0 * math.pi * frame_index / spec.period)
    # seeded noise: uniform in [-amplitude, amplitude]
    word = _mix64(_mix64(spec.seed & _MASK64) ^ (frame_index & _MASK64))
    unit = word / float(1 << 64)  # [0, 1)
    return spec.amplitude * (2.0 * unit - 1.0)


@dataclass(frozen=True)
class FrameOutcome:
    """Measured result of encoding one frame."""

    psnr: float
    bits: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.psnr):
            raise InputDomainError(f"psnr must be finite, got {self.psnr!r}")
        if not (math.isfinite(self.bits) and self.bits >= 0):
            raise InputDomainError(f"bits must be finite and >= 0, got {self.bits!r}")


@dataclass
class TraceTable:
    """Per-frame (qp, psnr, bits) rows parsed from a trace CSV.

    ``rows[frame]`` is sorted by qp. Lookups are exact at tabulated QPs and
    linear in qp between them; anything outside the tabulated span raises
    TraceDomainError.
    """

    rows: dict[int, list[tuple[int, float, float]]]

    @classmethod
    def parse(cls, text: str) -> "TraceTable":
        lines = text.splitlines()
        if not lines or lines[0].strip() != TRACE_HEADER:
            raise InputDomainError(
                f"trace table must start with header {TRACE_HEADER!r}"
            )
        rows: dict[int, list[tuple[int, float, float]]] = {}
        prev_key: tuple[int, int] | None = None
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise InputDomainError(f"trace line {lineno}: expected 4 fields")
            try:
                frame = int(parts[0])
                qp = int(parts[1])
                psnr = float(parts[2])
                bits = float(parts[3])
            except ValueError as exc:
                raise InputDomainError(f"trace line {lineno}: {exc}") from exc
            if not math.isfinite(psnr) or not math.isfinite(bits) or bits < 0:
                raise InputDomainError(f"trace line {lineno}: bad psnr/bits")
            key = (frame, qp)
            if prev_key is not None and key <= prev_key:
                raise InputDomainError(
                    f"trace line {lineno}: rows must be strictly sorted by (frame, qp)"
                )
            prev_key = key
            rows.setdefault(frame, []).append((qp, psnr, bits))
        if not rows:
            raise InputDomainError("trace table has no data rows")
        return cls(rows=rows)

    @classmethod
    def load(cls, path: str | Path) -> "TraceTable":
        return cls.parse(Path(path).read_text())

    def lookup(self, frame_index: int, qp: int) -> tuple[float, float]:
        entries = self.rows.get(frame_index)
        if entries is None:
            raise TraceDomainError(f"frame {frame_index} is not tabulated")
        if qp < entries[0][0] or qp > entries[-1][0]:
            raise TraceDomainError(
                f"qp {qp} outside tabulated span "
                f"[{entries[0][0]}, {entries[-1][0]}] at frame {frame_index}"
            )
        lo = entries[0]
        for entry in entries:
            if entry[0] == qp:
                return entry[1], entry[2]
            if entry[0] > qp:
                hi = entry
                t = (qp - lo[0]) / (hi[0] - lo[0])
                return lo[1] + t * (hi[1] - lo[1]), lo[2] + t * (hi[2] - lo[2])
            lo = entry
        raise TraceDomainError(f"qp {qp} not reachable at frame {frame_index}")


@dataclass
class PlantModel:
    """One simulated coding system instance.

    ``psnr_slope`` must be positive so PSNR strictly decreases in QP, and
    ``inertia`` must sit in [0, 1) so the first-order response is stable.
    ``prev_psnr`` is runtime state (the previous frame's output); when it is
    unset the first step responds as if already settled at its input.
    """

    kind: PlantKind
    psnr_intercept: float = 50.0
    psnr_slope: float = 0.4
    inertia: float = 0.0
    rate_ref_bits: float = 350_000.0
    rate_ref_qp: int = 32
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    trace_path: str | None = None
    trace: TraceTable | None = None
    initial_psnr: float | None = None
    prev_psnr: float | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.psnr_slope) and self.psnr_slope > 0):
            raise InputDomainError(
                f"psnr_slope must be finite and > 0, got {self.psnr_slope!r}"
            )
        if not math.isfinite(self.psnr_intercept):
            raise InputDomainError("psnr_intercept must be finite")
        if not (0.0 <= self.inertia < 1.0):
            raise InputDomainError(f"inertia must be in [0, 1), got {self.inertia!r}")
        if not (math.isfinite(self.rate_ref_bits) and self.rate_ref_bits >= 0):
            raise InputDomainError("rate_ref_bits must be finite and >= 0")
        if self.kind is PlantKind.TRACE_DRIVEN and self.trace is None:
            raise InputDomainError("trace-driven plant requires a trace table")
        if self.prev_psnr is None:
            self.prev_psnr = self.initial_psnr

    @classmethod
    def zero_order(cls, **kwargs) -> "PlantModel":
        return cls(kind=PlantKind.ZERO_ORDER, **kwargs)

    @classmethod
    def first_order(cls, inertia: float, **kwargs) -> "PlantModel":
        return cls(kind=PlantKind.FIRST_ORDER, inertia=inertia, **kwargs)

    @classmethod
    def trace_driven(cls, trace: TraceTable, **kwargs) -> "PlantModel":
        return cls(kind=PlantKind.TRACE_DRIVEN, trace=trace, **kwargs)

    def reset(self) -> None:
        """Discard runtime state so the next step starts a fresh stream."""
        self.prev_psnr = self.initial_psnr


def rate_model(model: PlantModel, qp: int) -> float:
    """Bits per frame at a QP: reference bits halved for every +6 QP."""
    return model.rate_ref_bits * 2.0 ** (-(qp - model.rate_ref_qp) / 6.0)


def step_plant(model: PlantModel, qp: int, frame_index: int) -> FrameOutcome:
    """Encode one frame at ``qp`` and return its measured PSNR and bits.

    Updates the plant's ``prev_psnr`` memory. Trace-driven plants read the
    table verbatim (no disturbance), so tabulated QPs reproduce the table
    bit-for-bit.
    """
    if frame_index < 0:
        raise InputDomainError("frame_index must be nonnegative")
    qp = int(qp)
    if model.kind is PlantKind.TRACE_DRIVEN:
        assert model.trace is not None
        psnr, bits = model.trace.lookup(frame_index, qp)
        model.prev_psnr = psnr
        return FrameOutcome(psnr=psnr, bits=bits)

    w = disturbance_at(model.disturbance, frame_index)
    core = model.psnr_intercept - model.psnr_slope * qp
    if model.kind is PlantKind.FIRST_ORDER and model.prev_psnr is not None:
        psnr = model.inertia * model.prev_psnr + (1.0 - model.inertia) * core + w
    else:
        psnr = core + w
    model.prev_psnr = psnr
    return FrameOutcome(psnr=psnr, bits=rate_model(model, qp))
