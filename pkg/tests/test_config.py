"""Tests for qndlink.config — YAML loading and option translation."""

import pytest

from qndlink.config import (
    load_config_file,
    merge_options,
    protocol_config_from_options,
    sweep_spec_from_options,
)
from qndlink.protocols import ProtocolKind, RunMode
from qndlink.state import Quadrature


# ---------------------------------------------------------------------------
# load_config_file
# ---------------------------------------------------------------------------


class TestLoadConfigFile:
    """Reading YAML config files."""

    def test_missing_file(self, tmp_path):
        """A missing path raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_config_file(tmp_path / "missing.yaml")

    def test_mapping(self, tmp_path):
        """Keys and values come back as written."""
        path = tmp_path / "run.yaml"
        path.write_text("protocol: fig1\ngain: 2.0\nsqueezing: 5\n", encoding="utf-8")
        assert load_config_file(path) == {"protocol": "fig1", "gain": 2.0, "squeezing": 5}

    def test_dashed_keys(self, tmp_path):
        """CLI-style dashed keys are normalized."""
        path = tmp_path / "run.yaml"
        path.write_text("noise-var: 1.0\ngain-alice: 2\n", encoding="utf-8")
        assert load_config_file(path) == {"noise_var": 1.0, "gain_alice": 2}

    def test_empty_file(self, tmp_path):
        """An empty file is an empty mapping."""
        path = tmp_path / "empty.yaml"
        path.write_text("", encoding="utf-8")
        assert load_config_file(path) == {}

    def test_key_value_lines(self, tmp_path):
        """Flat key = value files with comments load as a mapping."""
        path = tmp_path / "run.conf"
        path.write_text(
            "# fig1 with a lossy channel\nprotocol = fig1\ngain = 1.0\n\n"
            "transmitivity = 0.8   # channel on C\nnoise-var = 1\ngains = [0.5, 1, 2]\n",
            encoding="utf-8",
        )
        assert load_config_file(path) == {
            "protocol": "fig1",
            "gain": 1.0,
            "transmitivity": 0.8,
            "noise_var": 1,
            "gains": [0.5, 1, 2],
        }

    def test_key_value_file_builds_config(self, tmp_path):
        """A key = value file drives protocol_config_from_options."""
        path = tmp_path / "run.conf"
        path.write_text("protocol = fig2\ngain = 0.5\nsqueezing = 1\n", encoding="utf-8")
        config = protocol_config_from_options(load_config_file(path))
        assert config.kind is ProtocolKind.FIG2
        assert (config.gain_alice, config.squeezing) == (0.5, 1.0)

    def test_mixed_shapes_read_as_yaml(self, tmp_path):
        """A YAML file whose values contain '=' is not mistaken for key = value."""
        path = tmp_path / "run.yaml"
        path.write_text("protocol: fig1\nnote: a = b\n", encoding="utf-8")
        assert load_config_file(path) == {"protocol": "fig1", "note": "a = b"}

    def test_not_a_mapping(self, tmp_path):
        """A top-level list is rejected."""
        path = tmp_path / "list.yaml"
        path.write_text("- fig1\n- fig2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="mapping"):
            load_config_file(path)

    def test_invalid_yaml(self, tmp_path):
        """Malformed YAML raises ValueError."""
        path = tmp_path / "bad.yaml"
        path.write_text("gains: [1, 2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="not valid YAML"):
            load_config_file(path)


class TestMergeOptions:
    """Flags over file values."""

    def test_flags_win(self):
        """Set flags override; None flags leave file values alone."""
        merged = merge_options({"gain": 1.0, "seed": 3}, {"gain": 2.0, "seed": None})
        assert merged == {"gain": 2.0, "seed": 3}

    def test_inputs_untouched(self):
        """The file mapping is not mutated."""
        file_options = {"gain": 1.0}
        merge_options(file_options, {"gain": 2.0})
        assert file_options == {"gain": 1.0}


# ---------------------------------------------------------------------------
# protocol_config_from_options
# ---------------------------------------------------------------------------


class TestProtocolConfigFromOptions:
    """Flat run options to ProtocolConfig."""

    def test_symmetric_gain(self):
        """gain sets both local gains."""
        config = protocol_config_from_options({"protocol": "fig1", "gain": 2.0})
        assert config.kind is ProtocolKind.FIG1
        assert (config.gain_alice, config.gain_bob) == (2.0, 2.0)

    def test_split_gains(self):
        """gain_alice alone leaves G_B at 1."""
        config = protocol_config_from_options({"protocol": "fig2", "gain_alice": 0.5})
        assert (config.gain_alice, config.gain_bob) == (0.5, 1.0)

    def test_gain_conflict(self):
        """gain and gain_alice together are ambiguous."""
        with pytest.raises(ValueError, match="not both"):
            protocol_config_from_options({"protocol": "fig1", "gain": 1.0, "gain_bob": 2.0})

    def test_channel(self):
        """transmitivity and noise_var form the channel."""
        config = protocol_config_from_options(
            {"protocol": "fig1", "transmitivity": 0.8, "noise_var": 1.0}
        )
        assert config.channel.added_noise == pytest.approx(0.36)

    def test_no_channel(self):
        """Without a transmitivity there is no channel."""
        assert protocol_config_from_options({"protocol": "fig1"}).channel is None

    def test_noise_without_channel(self):
        """noise_var alone is an error."""
        with pytest.raises(ValueError, match="needs a transmitivity"):
            protocol_config_from_options({"protocol": "fig1", "noise_var": 1.0})

    def test_bad_transmitivity(self):
        """Out-of-range T raises ValueError."""
        with pytest.raises(ValueError):
            protocol_config_from_options({"protocol": "fig1", "transmitivity": 1.5})

    def test_missing_protocol(self):
        """protocol is required."""
        with pytest.raises(ValueError, match="No protocol"):
            protocol_config_from_options({"gain": 1.0})

    def test_unknown_protocol(self):
        """Unknown names raise ValueError."""
        with pytest.raises(ValueError):
            protocol_config_from_options({"protocol": "fig3"})

    def test_unknown_key(self):
        """Typos are reported."""
        with pytest.raises(ValueError, match="Unknown config key"):
            protocol_config_from_options({"protocol": "fig1", "squeezng": 1.0})

    def test_runs_and_mode(self):
        """runs maps to n_runs; mode strings are parsed."""
        config = protocol_config_from_options(
            {"protocol": "fig2", "runs": 500, "mode": "trajectory", "seed": 4}
        )
        assert config.n_runs == 500
        assert config.mode is RunMode.TRAJECTORY
        assert config.seed == 4

    def test_nested_inputs(self):
        """input_a is a nested mapping."""
        config = protocol_config_from_options(
            {"protocol": "ideal", "input_a": {"x": 1.0, "p": -1.0, "squeezing": 0.5, "axis": "x"}}
        )
        assert (config.input_a.x, config.input_a.p) == (1.0, -1.0)
        assert config.input_a.axis is Quadrature.X

    def test_negative_squeezing(self):
        """r must be non-negative."""
        with pytest.raises(ValueError):
            protocol_config_from_options({"protocol": "fig1", "squeezing": -1.0})


# ---------------------------------------------------------------------------
# sweep_spec_from_options
# ---------------------------------------------------------------------------


class TestSweepSpecFromOptions:
    """Flat sweep options to SweepSpec."""

    def test_scalars_become_grids(self):
        """Singular keys give one-point grids."""
        spec = sweep_spec_from_options(
            {"protocol": "fig1", "gain": 0.5, "squeezing": 1.0, "transmitivity": 0.8}
        )
        assert spec.kinds == [ProtocolKind.FIG1]
        assert spec.gains == [0.5]
        assert spec.squeezings == [1.0]
        assert spec.transmitivities == [0.8]

    def test_plural_keys(self):
        """Plural keys take lists."""
        spec = sweep_spec_from_options(
            {"protocols": ["fig1", "fig2"], "gains": [1, 2], "noise_vars": [0.5, 1.0]}
        )
        assert len(spec.configs()) == 8

    def test_singular_with_list(self):
        """A singular key may carry a list, as the CLI passes it."""
        spec = sweep_spec_from_options({"protocol": ["fig1", "fig2"], "gain": [0.5, 1.0]})
        assert spec.gains == [0.5, 1.0]
        assert len(spec.kinds) == 2

    def test_both_forms(self):
        """gain and gains together are rejected."""
        with pytest.raises(ValueError, match="not both"):
            sweep_spec_from_options({"protocol": "fig1", "gain": 1.0, "gains": [1.0]})

    def test_split_gains(self):
        """gain_alice / gain_bob become the split grid."""
        spec = sweep_spec_from_options({"protocol": "fig1", "gain_alice": [1, 2], "gain_bob": 1})
        assert spec.gains is None
        assert spec.gain_pairs() == [(1.0, 1.0), (2.0, 1.0)]

    def test_default_gain(self):
        """Without gains the grid is G = 1."""
        assert sweep_spec_from_options({"protocol": "fig2"}).gains == [1.0]

    def test_empty_gain_list(self):
        """An explicit empty gain list is an error."""
        with pytest.raises(ValueError, match="Gain grid is empty"):
            sweep_spec_from_options({"protocol": "fig2", "gain": []})

    def test_no_protocol(self):
        """A sweep needs at least one protocol."""
        with pytest.raises(ValueError):
            sweep_spec_from_options({"gain": 1.0})

    def test_shared_options(self):
        """runs, seed and idealize_resources pass through."""
        spec = sweep_spec_from_options(
            {"protocol": "fig1", "runs": 100, "seed": 2, "idealize_resources": True}
        )
        assert (spec.n_runs, spec.seed, spec.idealize_resources) == (100, 2, True)
