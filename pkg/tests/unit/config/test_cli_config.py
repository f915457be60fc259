"""
Unit tests for CLI argument validation and execution metadata
"""

import argparse

import pytest

from src.config.cli_config import CLI_VERSION, CLIConfiguration, file_digest


def make_args(tmp_path, command="fit", **overrides):
    values = {
        "command": command,
        "out_dir": tmp_path / "out",
        "config": None,
        "seed": 0,
        "workers": 1,
        "verbose": False,
    }
    if command == "fit":
        values.update(data=None, truth=None, restarts=0, clusters=2, trace=None)
    if command == "predict":
        values.update(model=None, density=None, x=None, profile=None)
    values.update(overrides)
    return argparse.Namespace(**values)


class TestCLIConfiguration:
    """Test validation of parsed arguments"""

    def test_valid_fit_arguments(self, tmp_path):
        """Test an existing dataset and writable output validate"""
        data = tmp_path / "data.csv"
        data.write_text("x1,y\n0,1\n")
        config = CLIConfiguration(make_args(tmp_path, data=data))

        assert config.validate_all()
        assert config.validated
        assert (tmp_path / "out").is_dir()
        assert not list((tmp_path / "out").iterdir())

    def test_missing_input_tracked(self, tmp_path):
        """Test missing files are collected for the dedicated exit code"""
        missing = tmp_path / "absent.csv"
        config = CLIConfiguration(make_args(tmp_path, data=missing))

        assert not config.validate_all()
        assert config.missing_paths == [missing]
        summary = config.get_validation_summary()
        assert summary["missing_paths"] == [str(missing)]
        assert summary["error_count"] == 1

    def test_directory_is_not_a_file(self, tmp_path):
        """Test a directory given as input is a validation error"""
        config = CLIConfiguration(make_args(tmp_path, data=tmp_path))

        assert not config.validate_input_paths()
        assert config.missing_paths == []
        assert "is not a file" in config.validation_errors[0]

    @pytest.mark.parametrize(
        "name,value", [("seed", -1), ("restarts", -2), ("clusters", 0), ("workers", 0)]
    )
    def test_negative_parameters(self, tmp_path, name, value):
        """Test numeric flags below their minimum are rejected"""
        config = CLIConfiguration(make_args(tmp_path, **{name: value}))

        assert not config.validate_execution_parameters()
        assert f"--{name}" in config.validation_errors[0]

    @pytest.mark.parametrize("profile", [[1.0, 0.0, 10.0], [0.0, 1.0, 1.0]])
    def test_invalid_profile(self, tmp_path, profile):
        """Test profile grids need START < STOP and at least two points"""
        args = make_args(tmp_path, command="predict", profile=profile)
        config = CLIConfiguration(args)

        assert not config.validate_execution_parameters()

    def test_validate_all_resets_errors(self, tmp_path):
        """Test repeated validation does not accumulate errors"""
        config = CLIConfiguration(make_args(tmp_path, seed=-1))

        config.validate_all()
        config.validate_all()

        assert len(config.validation_errors) == 1


class TestMetadata:
    """Test execution and provenance metadata"""

    def test_execution_metadata(self, tmp_path):
        """Test paths are stringified and the version recorded"""
        config = CLIConfiguration(make_args(tmp_path))

        metadata = config.create_execution_metadata()

        assert metadata["cli_version"] == CLI_VERSION
        assert metadata["configuration"]["out_dir"] == str(tmp_path / "out")
        assert "python_version" in metadata["system_info"]

    def test_provenance_is_run_independent(self, tmp_path):
        """Test inputs are identified by name and content digest only"""
        data = tmp_path / "data.csv"
        data.write_text("x1,y\n0,1\n")
        config = CLIConfiguration(make_args(tmp_path, data=data))

        first = config.provenance_metadata()
        second = config.provenance_metadata()

        assert first == second
        assert first["command"] == "fit"
        assert first["inputs"]["data"] == {
            "name": "data.csv",
            "sha256": file_digest(data),
        }
        assert "execution_timestamp" not in first

    def test_file_digest(self, tmp_path):
        """Test the digest follows file contents"""
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        a.write_text("same")
        b.write_text("same")

        assert file_digest(a) == file_digest(b)
        b.write_text("different")
        assert file_digest(a) != file_digest(b)
