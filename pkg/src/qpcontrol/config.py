"""Line-oriented experiment configuration with dotted keys.

Grammar: one ``key = value`` assignment per line, ``#`` starts a comment,
blank lines are ignored. Keys are dotted paths into the experiment
configuration (``gains.kp``, ``plant.disturbance.seed``); unknown keys are
rejected, never ignored. Absent keys take the package defaults. The same
key syntax backs CLI ``--set`` overrides, and ``emit_config`` writes a file
that parses back to an equal configuration.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Mapping, Sequence

from .controller import ControlObjective, PidGains, QpRange
from .errors import (
    ConfigInvariantError,
    ConfigParseError,
    InputDomainError,
    MissingConfigFile,
    UnknownConfigKey,
)
from .harness import ExperimentConfig, RunMode, parse_kind_pattern
from .plant import DisturbanceKind, DisturbanceSpec, PlantKind, PlantModel, TraceTable


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigParseError(f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigParseError(f"{key}: expected an integer, got {raw!r}") from None


def _parse_optional_float(key: str, raw: str) -> float | None:
    if raw == "none":
        return None
    return _parse_float(key, raw)


def _parse_optional_str(key: str, raw: str) -> str | None:
    return None if raw == "none" else raw


def _parse_choice(choices: tuple[str, ...]) -> Callable[[str, str], str]:
    def parse(key: str, raw: str) -> str:
        if raw not in choices:
            raise ConfigParseError(
                f"{key}: expected one of {', '.join(choices)}; got {raw!r}"
            )
        return raw

    return parse


def _fmt(value) -> str:
    if value is None:
        return "none"
    return str(value)


# key -> (default, parser). Order is the canonical emission order.
SCHEMA: dict[str, tuple[object, Callable[[str, str], object]]] = {
    "objective.target_psnr": (37.2, _parse_float),
    "objective.lambda": (0.8, _parse_float),
    "gains.kp": (2.12, _parse_float),
    "gains.ki": (0.10, _parse_float),
    "gains.kd": (0.60, _parse_float),
    "range.qp_min": (0, _parse_int),
    "range.qp_max": (51, _parse_int),
    "qp_offset": (32.0, _parse_float),
    "kind_pattern": ("inter", lambda key, raw: raw),
    "n_frames": (300, _parse_int),
    "seed": (0, _parse_int),
    "mode": ("controlled", _parse_choice(tuple(m.value for m in RunMode))),
    "plant.kind": (
        "first_order",
        _parse_choice(tuple(k.value for k in PlantKind)),
    ),
    "plant.psnr_intercept": (50.0, _parse_float),
    "plant.psnr_slope": (0.4, _parse_float),
    "plant.inertia": (0.5, _parse_float),
    "plant.rate_ref_bits": (350000.0, _parse_float),
    "plant.rate_ref_qp": (32, _parse_int),
    "plant.initial_psnr": (None, _parse_optional_float),
    "plant.trace_path": (None, _parse_optional_str),
    "plant.disturbance.kind": (
        "none",
        _parse_choice(tuple(k.value for k in DisturbanceKind)),
    ),
    "plant.disturbance.amplitude": (0.0, _parse_float),
    "plant.disturbance.period": (0, _parse_int),
    "plant.disturbance.step_frame": (0, _parse_int),
    "plant.disturbance.seed": (0, _parse_int),
}


def _parse_lines(text: str, source: str) -> dict[str, object]:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigParseError(
                f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}"
            )
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in SCHEMA:
            raise UnknownConfigKey(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = SCHEMA[key][1](key, raw)
    return values


def _build_section(section: str, build: Callable[[], object]):
    try:
        return build()
    except InputDomainError as exc:
        raise ConfigInvariantError(f"{section}: {exc}") from exc


def parse_config(
    path: str | Path | None,
    overrides: Sequence[str] | Mapping[str, str] = (),
) -> ExperimentConfig:
    """Load (or default) a configuration and apply dotted-key overrides.

    ``overrides`` entries are ``key=value`` strings applied after the file,
    in order. Missing file, malformed line, unknown key and invariant
    violation each raise their own ConfigError subclass, naming the
    offending key path.
    """
    kv = {key: default for key, (default, _) in SCHEMA.items()}

    if path is not None:
        file_path = Path(path)
        if not file_path.is_file():
            raise MissingConfigFile(f"config file not found: {file_path}")
        kv.update(_parse_lines(file_path.read_text(), str(file_path)))

    if isinstance(overrides, Mapping):
        override_lines = [f"{key}={value}" for key, value in overrides.items()]
    else:
        override_lines = list(overrides)
    for i, line in enumerate(override_lines):
        kv.update(_parse_lines(line, f"override[{i}]"))

    gains = _build_section(
        "gains",
        lambda: PidGains(kp=kv["gains.kp"], ki=kv["gains.ki"], kd=kv["gains.kd"]),
    )
    objective = _build_section(
        "objective",
        lambda: ControlObjective(
            target_psnr=kv["objective.target_psnr"], lambda_=kv["objective.lambda"]
        ),
    )
    qp_range = _build_section(
        "range",
        lambda: QpRange(qp_min=kv["range.qp_min"], qp_max=kv["range.qp_max"]),
    )
    disturbance = _build_section(
        "plant.disturbance",
        lambda: DisturbanceSpec(
            kind=DisturbanceKind(kv["plant.disturbance.kind"]),
            amplitude=kv["plant.disturbance.amplitude"],
            period=kv["plant.disturbance.period"],
            step_frame=kv["plant.disturbance.step_frame"],
            seed=kv["plant.disturbance.seed"],
        ),
    )

    plant_kind = PlantKind(kv["plant.kind"])
    trace = None
    trace_path = kv["plant.trace_path"]
    if plant_kind is PlantKind.TRACE_DRIVEN:
        if trace_path is None:
            raise ConfigInvariantError(
                "plant.trace_path: required for a trace_driven plant"
            )
        trace_file = Path(trace_path)
        if not trace_file.is_file():
            raise ConfigInvariantError(
                f"plant.trace_path: trace file not found: {trace_file}"
            )
        try:
            trace = TraceTable.load(trace_file)
        except InputDomainError as exc:
            raise ConfigInvariantError(f"plant.trace_path: {exc}") from exc

    plant = _build_section(
        "plant",
        lambda: PlantModel(
            kind=plant_kind,
            psnr_intercept=kv["plant.psnr_intercept"],
            psnr_slope=kv["plant.psnr_slope"],
            inertia=kv["plant.inertia"],
            rate_ref_bits=kv["plant.rate_ref_bits"],
            rate_ref_qp=kv["plant.rate_ref_qp"],
            disturbance=disturbance,
            trace_path=trace_path,
            trace=trace,
            initial_psnr=kv["plant.initial_psnr"],
        ),
    )

    try:
        parse_kind_pattern(kv["kind_pattern"])
    except InputDomainError as exc:
        raise ConfigInvariantError(f"kind_pattern: {exc}") from exc

    return _build_section(
        "experiment",
        lambda: ExperimentConfig(
            plant=plant,
            objective=objective,
            gains=gains,
            qp_range=qp_range,
            qp_offset=kv["qp_offset"],
            kind_pattern=kv["kind_pattern"],
            n_frames=kv["n_frames"],
            seed=kv["seed"],
            mode=RunMode(kv["mode"]),
        ),
    )


def emit_config(config: ExperimentConfig) -> str:
    """Serialize a configuration so that parsing it back compares equal."""
    plant = config.plant
    if plant.kind is PlantKind.TRACE_DRIVEN and plant.trace_path is None:
        raise ConfigInvariantError(
            "plant.trace_path: required to serialize a trace_driven plant"
        )
    values = {
        "objective.target_psnr": repr(config.objective.target_psnr),
        "objective.lambda": repr(config.objective.lambda_),
        "gains.kp": repr(config.gains.kp),
        "gains.ki": repr(config.gains.ki),
        "gains.kd": repr(config.gains.kd),
        "range.qp_min": config.qp_range.qp_min,
        "range.qp_max": config.qp_range.qp_max,
        "qp_offset": repr(config.qp_offset),
        "kind_pattern": config.kind_pattern,
        "n_frames": config.n_frames,
        "seed": config.seed,
        "mode": config.mode.value,
        "plant.kind": plant.kind.value,
        "plant.psnr_intercept": repr(plant.psnr_intercept),
        "plant.psnr_slope": repr(plant.psnr_slope),
        "plant.inertia": repr(plant.inertia),
        "plant.rate_ref_bits": repr(plant.rate_ref_bits),
        "plant.rate_ref_qp": plant.rate_ref_qp,
        "plant.initial_psnr": (
            None if plant.initial_psnr is None else repr(plant.initial_psnr)
        ),
        "plant.trace_path": plant.trace_path,
        "plant.disturbance.kind": plant.disturbance.kind.value,
        "plant.disturbance.amplitude": repr(plant.disturbance.amplitude),
        "plant.disturbance.period": plant.disturbance.period,
        "plant.disturbance.step_frame": plant.disturbance.step_frame,
        "plant.disturbance.seed": plant.disturbance.seed,
    }
    lines = [f"{key} = {_fmt(values[key])}" for key in SCHEMA]
    return "\n".join(lines) + "\n"
