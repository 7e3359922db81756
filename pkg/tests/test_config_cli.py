import json

import numpy as np
import pytest

from skelforge.cli import dispatch
from skelforge.config import Config, load_profile
from skelforge.errors import ConfigError


class TestConfig:
    def test_defaults_present(self):
        config = Config()
        assert config.get_int("diffusion.steps") == 1000
        assert config.get_float("train.lr") == 1e-4

    def test_file_overrides(self, tmp_path):
        path = tmp_path / "test.cfg"
        path.write_text("[diffusion]\nsteps = 50\n\n[train]\nlr = 0.01\n")
        config = Config()
        config.update_from_file(path)
        assert config.get_int("diffusion.steps") == 50
        assert config.get_float("train.lr") == 0.01
        assert config.get_int("model.d_model") == 256  # untouched default

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            Config().get_str("nope.nothing")

    def test_bad_value_names_key(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[diffusion]\nsteps = banana\n")
        config = Config()
        config.update_from_file(path)
        with pytest.raises(ConfigError) as err:
            config.get_int("diffusion.steps")
        assert "diffusion.steps" in str(err.value)

    def test_lists(self):
        config = Config()
        assert config.get_floats("protocol.fractions") == [0.75, 0.9, 0.95, 1.0]
        assert config.get_ints("recognizer.channels") == [32, 64, 128]
        assert config.get_strs("protocol.policies") == ["none", "synthetic"]

    def test_desk_profile_bundled(self):
        config = load_profile("desk")
        assert config.get_int("diffusion.steps") == 100
        assert config.get_int("model.d_model") == 128

    def test_missing_profile(self):
        with pytest.raises(ConfigError):
            load_profile("warehouse")

    def test_snapshot_sorted(self):
        snap = Config().snapshot()
        assert list(snap) == sorted(snap)


class TestCliBasics:
    def test_help_exits_zero(self, capsys):
        assert dispatch(["--help"]) == 0
        assert "skelforge" in capsys.readouterr().out

    def test_subcommand_help(self, capsys):
        assert dispatch(["gen-toy-data", "--help"]) == 0

    def test_unknown_subcommand_exit_2(self):
        assert dispatch(["frobnicate"]) == 2

    def test_unknown_flag_exit_2(self):
        assert dispatch(["gen-toy-data", "--bogus", "1"]) == 2

    def test_no_subcommand_exit_2(self):
        assert dispatch([]) == 2

    def test_bad_config_value_exit_3(self, tmp_path):
        out = tmp_path / "out"
        code = dispatch([
            "gen-toy-data", "--out", str(out), "--set", "data.classes=banana",
        ])
        assert code == 3

    def test_missing_dataset_exit_4(self, tmp_path):
        code = dispatch([
            "train-diffusion", "--data", str(tmp_path / "absent"), "--out",
            str(tmp_path / "out"),
        ])
        assert code == 4


class TestGenToyDataCli:
    def test_writes_dataset_and_manifest(self, tmp_path):
        out = tmp_path / "data"
        code = dispatch([
            "gen-toy-data", "--classes", "2", "--per-class", "3",
            "--frames", "16", "--seed", "5", "--out", str(out),
        ])
        assert code == 0
        assert (out / "manifest.json").exists()
        run = json.loads((out / "run_manifest.json").read_text())
        assert run["status"] == "ok"
        assert run["seeds"] == [5]
        from skelforge.dataset import load_dataset

        manifest, clips = load_dataset(out)
        assert manifest.num_classes == 2
        assert len(clips) == 6

    def test_reproducible_across_runs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert dispatch([
                "gen-toy-data", "--classes", "2", "--per-class", "2",
                "--frames", "16", "--seed", "9", "--out", str(out),
            ]) == 0
        clip_rel = json.loads((a / "manifest.json").read_text())["clips"][0]["path"]
        assert (a / clip_rel).read_bytes() == (b / clip_rel).read_bytes()

    def test_failed_run_leaves_failure_marker(self, tmp_path):
        out = tmp_path / "data"
        code = dispatch([
            "gen-toy-data", "--classes", "1", "--per-class", "3",
            "--frames", "16", "--out", str(out),
        ])
        assert code == 4
        run = json.loads((out / "run_manifest.json").read_text())
        assert run["status"] == "failed"
        assert run["error"]


def test_run_manifest_schema():
    from skelforge.reports import RUN_MANIFEST_SCHEMA, validate_report
    from skelforge.runmanifest import RunManifest

    manifest = RunManifest(command="x", config={}, seeds=[1])
    validate_report(manifest.to_json(), RUN_MANIFEST_SCHEMA)
