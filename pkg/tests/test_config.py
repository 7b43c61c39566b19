"""Configuration grammar tests: defaults, overrides, errors, round-trip."""

import pytest

from qpcontrol.config import emit_config, parse_config
from qpcontrol.errors import (
    ConfigInvariantError,
    ConfigParseError,
    MissingConfigFile,
    UnknownConfigKey,
)
from qpcontrol.harness import RunMode
from qpcontrol.plant import DisturbanceKind, PlantKind

TRACE_TEXT = """frame,qp,psnr_db,bits
0,30,38.000,500000
0,40,34.000,200000
1,30,37.500,480000
1,40,33.500,190000
"""


class TestDefaults:
    def test_no_file_no_overrides_gives_paper_defaults(self):
        config = parse_config(None)
        assert (config.gains.kp, config.gains.ki, config.gains.kd) == (2.12, 0.10, 0.60)
        assert config.objective.lambda_ == 0.8
        assert (config.qp_range.qp_min, config.qp_range.qp_max) == (0, 51)
        assert config.objective.target_psnr == 37.2
        assert config.n_frames == 300
        assert config.mode is RunMode.CONTROLLED
        assert config.plant.kind is PlantKind.FIRST_ORDER
        assert config.plant.inertia == 0.5

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.cfg"
        path.write_text("# nothing but a comment\n\n")
        assert parse_config(path) == parse_config(None)


class TestOverridesAndFiles:
    def test_lambda_override_disables_fluctuation_term(self):
        config = parse_config(None, ["objective.lambda=1.0"])
        assert config.objective.lambda_ == 1.0

    def test_file_values_are_applied(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "objective.target_psnr = 35.0\n"
            "n_frames = 120  # short run\n"
            "plant.kind = zero_order\n"
            "plant.disturbance.kind = sinusoid\n"
            "plant.disturbance.amplitude = 1.0\n"
            "plant.disturbance.period = 30\n"
        )
        config = parse_config(path)
        assert config.objective.target_psnr == 35.0
        assert config.n_frames == 120
        assert config.plant.kind is PlantKind.ZERO_ORDER
        assert config.plant.disturbance.kind is DisturbanceKind.SINUSOID

    def test_overrides_win_over_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("n_frames = 120\n")
        assert parse_config(path, ["n_frames=7"]).n_frames == 7

    def test_later_overrides_win(self):
        config = parse_config(None, ["seed=1", "seed=2"])
        assert config.seed == 2


class TestErrors:
    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingConfigFile):
            parse_config(tmp_path / "absent.cfg")

    def test_unknown_key_is_rejected_not_ignored(self):
        with pytest.raises(UnknownConfigKey) as excinfo:
            parse_config(None, ["gains.kq=1.0"])
        assert "gains.kq" in str(excinfo.value)

    def test_negative_gain_is_an_invariant_violation(self):
        with pytest.raises(ConfigInvariantError) as excinfo:
            parse_config(None, ["gains.kp=-1"])
        assert "gains" in str(excinfo.value)
        assert "kp" in str(excinfo.value)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("this is not an assignment\n")
        with pytest.raises(ConfigParseError):
            parse_config(path)

    def test_non_numeric_value(self):
        with pytest.raises(ConfigParseError):
            parse_config(None, ["n_frames=many"])

    def test_bad_enum_value(self):
        with pytest.raises(ConfigParseError) as excinfo:
            parse_config(None, ["plant.kind=fourth_order"])
        assert "plant.kind" in str(excinfo.value)

    def test_bad_kind_pattern(self):
        with pytest.raises(ConfigInvariantError):
            parse_config(None, ["kind_pattern=sometimes"])

    def test_lambda_out_of_range(self):
        with pytest.raises(ConfigInvariantError):
            parse_config(None, ["objective.lambda=2.0"])

    def test_trace_driven_requires_path(self):
        with pytest.raises(ConfigInvariantError) as excinfo:
            parse_config(None, ["plant.kind=trace_driven"])
        assert "trace_path" in str(excinfo.value)

    def test_trace_file_must_exist(self, tmp_path):
        with pytest.raises(ConfigInvariantError):
            parse_config(
                None,
                [
                    "plant.kind=trace_driven",
                    f"plant.trace_path={tmp_path / 'missing.csv'}",
                ],
            )


class TestRoundTrip:
    @pytest.mark.parametrize(
        "overrides",
        [
            [],
            ["objective.lambda=1.0", "gains.kd=0.0", "seed=77"],
            [
                "plant.kind=zero_order",
                "plant.disturbance.kind=step",
                "plant.disturbance.amplitude=2.5",
                "plant.disturbance.step_frame=40",
                "kind_pattern=intra_every:8",
                "mode=fixed",
                "qp_offset=37.25",
            ],
            ["plant.inertia=0.8", "plant.initial_psnr=41.5", "n_frames=12"],
        ],
    )
    def test_parse_emit_parse_is_identity(self, overrides):
        config = parse_config(None, overrides)
        text = emit_config(config)
        assert parse_config_from_text(text) == config

    def test_round_trip_with_trace(self, tmp_path):
        trace_path = tmp_path / "trace.csv"
        trace_path.write_text(TRACE_TEXT)
        config = parse_config(
            None,
            [
                "plant.kind=trace_driven",
                f"plant.trace_path={trace_path}",
                "n_frames=2",
            ],
        )
        assert parse_config_from_text(emit_config(config)) == config


def parse_config_from_text(text):
    lines = [line for line in text.splitlines() if line.strip()]
    return parse_config(None, lines)
