"""Tests for run configuration loading."""

import json

import pytest

from chainmi.core.config import BoundsBlock, RunConfig, SpaceConfig, load_run_config
from chainmi.core.exceptions import ConfigError


def write(tmp_path, text: str):
    path = tmp_path / "run.json"
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadRunConfig:
    """Tests for load_run_config."""

    def test_valid(self, tmp_path):
        """Test a complete bounds config."""
        data = {
            "seed": 7,
            "bounds": {
                "run": ["maximal", "mi"],
                "maximal": {"cardinality": 4},
                "mi": {"mi": "inf"},
            },
        }
        config = load_run_config(write(tmp_path, json.dumps(data)))
        assert config.seed == 7
        assert config.bounds.maximal.cardinality == 4
        assert config.bounds.mi.mi == "inf"
        assert config.bounds.envelope.kind == "subgaussian"

    def test_invalid_json_reports_line(self, tmp_path):
        """Test syntax errors carry the line number."""
        with pytest.raises(ConfigError) as excinfo:
            load_run_config(write(tmp_path, '{\n  "seed": 1,\n  oops\n}'))
        assert excinfo.value.line == 3
        assert "line 3" in str(excinfo.value)

    def test_schema_error_reports_key_line(self, tmp_path):
        """Test schema violations point at the offending key."""
        with pytest.raises(ConfigError) as excinfo:
            load_run_config(write(tmp_path, '{\n  "seed": 0,\n  "samples": 5\n}'))
        assert excinfo.value.line == 3
        assert "samples" in str(excinfo.value)

    def test_missing_file(self, tmp_path):
        """Test unreadable paths."""
        with pytest.raises(ConfigError):
            load_run_config(tmp_path / "absent.json")

    def test_relative_csv_resolved(self, tmp_path):
        """Test CSV paths are relative to the config file."""
        data = {"bounds": {"run": ["dudley"], "space": {"distance_csv": "dist.csv"}}}
        config = load_run_config(write(tmp_path, json.dumps(data)))
        assert config.bounds.space.distance_csv == tmp_path / "dist.csv"

    def test_listed_bound_needs_block(self, tmp_path):
        """Test a run entry without its block."""
        data = {"bounds": {"run": ["chained"]}}
        with pytest.raises(ConfigError, match="chained"):
            load_run_config(write(tmp_path, json.dumps(data)))


class TestSchema:
    """Tests for individual config blocks."""

    def test_space_needs_one_source(self):
        """Test zero or two space sources."""
        with pytest.raises(ValueError):
            SpaceConfig()
        with pytest.raises(ValueError):
            SpaceConfig(circle_points=4, coordinates=[[0.0]])

    def test_dudley_needs_space(self):
        """Test dudley without a space block."""
        with pytest.raises(ValueError):
            BoundsBlock(run=["dudley"])

    def test_selected_tail_needs_mi(self):
        """Test tail selected mode without mi."""
        with pytest.raises(ValueError):
            BoundsBlock(run=["tail"], tail={"mode": "selected", "cardinality": 2, "u": 1.0})


class TestOverrides:
    """Tests for RunConfig.with_overrides."""

    def test_none_ignored(self):
        """Test unset CLI flags keep file values."""
        config = RunConfig(seed=5).with_overrides(seed=None, samples=500)
        assert config.seed == 5
        assert config.samples == 500

    def test_invalid_override(self):
        """Test overrides are validated."""
        with pytest.raises(ConfigError, match="samples"):
            RunConfig().with_overrides(samples=5)
