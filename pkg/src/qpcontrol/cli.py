"""Command-line front end: simulate | identify | compare | sweep.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.
All emitted files are reproducible byte-for-byte for a given configuration
and seed.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import sys
from pathlib import Path

from .config import SCHEMA, parse_config
from .errors import (
    ConfigError,
    DegenerateInputError,
    InputDomainError,
    SequencingError,
    TraceDomainError,
    UnknownConfigKey,
)
from .harness import (
    RunMode,
    compare,
    comparison_text,
    compute_metrics,
    metrics_json_text,
    run_closed_loop,
    run_fixed_qp,
    write_metrics_json,
    write_trace_csv,
)
from .sysid import estimate_order, run_impulse


def _add_common_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None, help="configuration file")
    sub.add_argument(
        "--out", type=Path, default=Path("."), help="output directory (created if absent)"
    )
    sub.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted-path configuration override, repeatable",
    )
    sub.add_argument("--seed", type=int, default=None, help="experiment seed override")
    sub.add_argument(
        "--mode",
        choices=[m.value for m in RunMode],
        default=None,
        help="run mode override",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qpcontrol",
        description="Closed-loop QP quality control simulator and analysis tools.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser(
        "simulate", help="run one experiment and emit trace.csv + metrics.json"
    )
    _add_common_options(simulate)
    simulate.set_defaults(func=_cmd_simulate)

    identify = subparsers.add_parser(
        "identify", help="impulse-response order estimation of the configured plant"
    )
    _add_common_options(identify)
    identify.set_defaults(func=_cmd_identify)

    compare_cmd = subparsers.add_parser(
        "compare", help="run controlled and fixed-QP on one config and tabulate both"
    )
    _add_common_options(compare_cmd)
    compare_cmd.set_defaults(func=_cmd_compare)

    sweep = subparsers.add_parser(
        "sweep", help="run a parameter grid and emit one metrics row per point"
    )
    _add_common_options(sweep)
    sweep.add_argument(
        "--grid",
        action="append",
        default=[],
        metavar="KEY=V1,V2,...",
        help="grid axis over a config key, repeatable (Cartesian product)",
    )
    sweep.set_defaults(func=_cmd_sweep)

    return parser


def _flag_overrides(args: argparse.Namespace) -> list[str]:
    # Dedicated flags win over --set.
    overrides: list[str] = []
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
        overrides.append(f"plant.disturbance.seed={args.seed}")
    if args.mode is not None:
        overrides.append(f"mode={args.mode}")
    return overrides


def _load_config(args: argparse.Namespace):
    return parse_config(args.config, list(args.overrides) + _flag_overrides(args))


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_for_mode(config):
    if config.mode is RunMode.CONTROLLED:
        return run_closed_loop(config)
    return run_fixed_qp(config)


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    records = _run_for_mode(config)
    metrics = compute_metrics(records, config.objective)
    write_trace_csv(records, out / "trace.csv")
    write_metrics_json(metrics, out / "metrics.json")
    print(
        f"{config.mode.value}: {len(records)} frames, "
        f"avg_psnr={metrics.avg_psnr:.4f} dB, "
        f"quality_fluc={metrics.quality_fluc_db:.4f} dB"
    )
    return 0


def _cmd_identify(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    experiment = run_impulse(config.plant, config.qp_range, config.n_frames)
    estimate = estimate_order(experiment.response)
    pole = "none" if estimate.pole is None else f"{estimate.pole:.6f}"
    report = (
        f"order = {estimate.order}\n"
        f"pole = {pole}\n"
        f"residual = {estimate.fit_residual:.6f}\n"
    )
    response_lines = ["frame,error_db"] + [
        f"{t},{value:.6f}" for t, value in enumerate(experiment.response)
    ]
    (out / "identify_report.txt").write_text(report)
    (out / "impulse_response.csv").write_text("\n".join(response_lines) + "\n")
    print(report, end="")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    config = _load_config(args)
    out = _out_dir(args)
    controlled_cfg = dataclasses.replace(config, mode=RunMode.CONTROLLED)
    fixed_cfg = dataclasses.replace(config, mode=RunMode.FIXED_QP)
    controlled = compute_metrics(run_closed_loop(controlled_cfg), config.objective)
    baseline = compute_metrics(run_fixed_qp(fixed_cfg), config.objective)
    report = compare(controlled, baseline)
    text = comparison_text(report)
    (out / "comparison.txt").write_text(text)
    write_metrics_json(controlled, out / "metrics_controlled.json")
    write_metrics_json(baseline, out / "metrics_fixed.json")
    print(text, end="")
    return 0


def _parse_grid(grid_args: list[str]) -> list[tuple[str, list[str]]]:
    axes: list[tuple[str, list[str]]] = []
    for spec in grid_args:
        if "=" not in spec:
            raise UnknownConfigKey(f"--grid expects KEY=V1,V2,..., got {spec!r}")
        key, _, raw_values = spec.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise UnknownConfigKey(f"--grid: unknown key {key!r}")
        values = [v.strip() for v in raw_values.split(",") if v.strip()]
        if not values:
            raise UnknownConfigKey(f"--grid: no values for key {key!r}")
        axes.append((key, values))
    return axes


def _cmd_sweep(args: argparse.Namespace) -> int:
    if not args.grid:
        print("error: sweep requires at least one --grid axis", file=sys.stderr)
        return 2
    axes = _parse_grid(args.grid)
    out = _out_dir(args)
    keys = [key for key, _ in axes]
    points: list[tuple[str, ...]] = []
    for combo in itertools.product(*(values for _, values in axes)):
        if combo not in points:  # duplicate grid points are dropped
            points.append(combo)
    header = keys + [
        "avg_psnr",
        "control_error_db",
        "control_error_pct",
        "quality_fluc_db",
        "bitrate_mean",
        "bit_fluc",
    ]
    rows = [",".join(header)]
    for combo in points:
        grid_overrides = [f"{key}={value}" for key, value in zip(keys, combo)]
        config = parse_config(
            args.config,
            list(args.overrides) + grid_overrides + _flag_overrides(args),
        )
        records = _run_for_mode(config)
        metrics = compute_metrics(records, config.objective)
        cells = list(combo) + [
            f"{metrics.avg_psnr:.6f}",
            f"{metrics.control_error_db:.6f}",
            f"{metrics.control_error_pct:.6f}",
            f"{metrics.quality_fluc_db:.6f}",
            f"{metrics.bitrate_mean:.6f}",
            f"{metrics.bit_fluc:.6f}",
        ]
        rows.append(",".join(cells))
    (out / "sweep.csv").write_text("\n".join(rows) + "\n")
    print(f"sweep: {len(points)} grid points over {', '.join(keys)}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        InputDomainError,
        DegenerateInputError,
        TraceDomainError,
        SequencingError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
