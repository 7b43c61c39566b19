"""Impulse-response identification of a plant's discrete order (0 or 1).

The experiment drives the plant with a QP impulse — minimum QP for one
frame, then maximum QP for the rest — and records the quality error against
the settled level, so the response isolates the plant's own dynamics. A
one-parameter autoregressive fit ``d[t+1] = r * d[t]`` on the de-trended
transient then separates a memoryless (order 0) response from a one-pole
(order 1) response.

All functions here are pure over their inputs and safe for parallel use;
``run_impulse`` works on a private copy of the plant.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .controller import QpRange
from .errors import DegenerateInputError, InputDomainError
from .plant import DisturbanceSpec, PlantModel, step_plant

#: Smallest |pole| treated as real memory rather than numerical residue.
DEFAULT_POLE_THRESHOLD = 0.05
#: Largest relative one-step fit residual accepted as a clean order-1 fit.
DEFAULT_RESIDUAL_THRESHOLD = 0.1

MIN_RESPONSE_LENGTH = 8


@dataclass(frozen=True)
class ImpulseExperiment:
    """Recorded QP impulse run: the input sequence and the error response."""

    qp_sequence: tuple[int, ...]
    length: int
    response: tuple[float, ...]


@dataclass(frozen=True)
class OrderEstimate:
    """Estimated system order with the fitted pole (order 1 only)."""

    order: int
    pole: float | None
    fit_residual: float

    def __post_init__(self) -> None:
        if self.order not in (0, 1):
            raise InputDomainError(f"order must be 0 or 1, got {self.order}")
        if self.order == 0 and self.pole is not None:
            raise InputDomainError("order-0 estimates carry no pole")
        if self.order == 1 and (self.pole is None or not -1.0 < self.pole < 1.0):
            raise InputDomainError(f"order-1 pole must lie in (-1, 1), got {self.pole!r}")
        if not (math.isfinite(self.fit_residual) and self.fit_residual >= 0):
            raise InputDomainError("fit_residual must be finite and >= 0")


def run_impulse(plant: PlantModel, qp_range: QpRange, n: int) -> ImpulseExperiment:
    """Drive a disturbance-free copy of the plant with a QP impulse.

    The input is ``qp_min`` at frame 0 and ``qp_max`` from frame 1 on. The
    response is each frame's PSNR minus the settled PSNR (mean of the last
    quarter of the run), i.e. the error a pure setpoint objective would see
    against the settled level.
    """
    if n < MIN_RESPONSE_LENGTH:
        raise InputDomainError(
            f"impulse run needs at least {MIN_RESPONSE_LENGTH} frames, got {n}"
        )
    probe = copy.deepcopy(plant)
    probe.disturbance = DisturbanceSpec()
    probe.reset()
    qps = (qp_range.qp_min,) + (qp_range.qp_max,) * (n - 1)
    psnr = [step_plant(probe, qp, t).psnr for t, qp in enumerate(qps)]
    settled = float(np.mean(psnr[-(n // 4):]))
    response = tuple(value - settled for value in psnr)
    return ImpulseExperiment(qp_sequence=qps, length=n, response=response)


def estimate_order(
    response: Sequence[float],
    pole_threshold: float = DEFAULT_POLE_THRESHOLD,
    residual_threshold: float = DEFAULT_RESIDUAL_THRESHOLD,
) -> OrderEstimate:
    """Classify a recorded response as order 0 or order 1.

    De-trends by the mean of the last quarter (robust to residual
    transient), then fits ``d[t+1] = r * d[t]`` by least squares on the
    transient portion: the samples up to the first one that has settled
    into the tail's noise band, plus one settled successor so the decay to
    zero is part of the fit. Order 1 is reported when the fitted pole
    magnitude reaches ``pole_threshold`` with a relative RMS residual no
    larger than ``residual_threshold``; the pole must also clear the
    measured noise-to-signal ratio (tail noise band over peak), so a pole
    no larger than the noise floor is never mistaken for memory. The
    residual is normalized by the peak de-trended magnitude; the window,
    the fit and both gates are invariant under scaling of the response.

    Raises DegenerateInputError when the response carries no transient
    (all-zero or constant) or when the fit lands outside the stable
    order-<=1 model family.
    """
    arr = np.asarray(response, dtype=float)
    if arr.ndim != 1 or arr.size < MIN_RESPONSE_LENGTH:
        raise InputDomainError(
            f"response must be 1-D with at least {MIN_RESPONSE_LENGTH} samples"
        )
    if not np.all(np.isfinite(arr)):
        raise InputDomainError("response must be finite")
    scale = float(np.max(np.abs(arr)))
    if scale == 0.0:
        raise DegenerateInputError("all-zero response: order undefined")

    quarter = arr.size // 4
    settled = float(np.mean(arr[-quarter:]))
    detrended = arr - settled
    peak = float(np.max(np.abs(detrended)))
    if peak <= 1e-12 * scale:
        raise DegenerateInputError("constant response: order undefined")

    # Transient window: everything before the response first enters the
    # settled tail's noise band (floored so an exactly-zero tail still
    # leaves a band), plus one settled sample. Late noise excursions must
    # not stretch the window, hence first entry rather than last exit.
    noise_band = max(3.0 * float(np.std(detrended[-quarter:])), 1e-9 * peak)
    inside = np.nonzero(np.abs(detrended[1:]) <= noise_band)[0]
    first_settled = int(inside[0]) + 1 if inside.size else arr.size - quarter - 1
    window = min(max(first_settled + 1, 2), arr.size - quarter)
    x = detrended[: window - 1]
    y = detrended[1:window]
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise DegenerateInputError("transient has no energy: order undefined")
    r = float(np.dot(x, y) / denom)
    residual = float(np.sqrt(np.mean((y - r * x) ** 2))) / peak

    # A zero-order response settles by sample 1, so its fitted pole is at
    # most noise_band / peak; requiring the pole to clear that ratio makes
    # the order-0 call exact rather than probabilistic under tail noise.
    effective_threshold = max(pole_threshold, noise_band / peak)
    if abs(r) >= effective_threshold and residual <= residual_threshold:
        if abs(r) >= 1.0:
            raise DegenerateInputError(
                f"fitted pole {r:.4f} outside the stable order-<=1 family"
            )
        return OrderEstimate(order=1, pole=r, fit_residual=residual)
    return OrderEstimate(order=0, pole=None, fit_residual=residual)
