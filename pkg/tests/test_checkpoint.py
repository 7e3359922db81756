import numpy as np
import pytest
import torch

from skelforge.checkpoint import (
    config_digest,
    file_digest,
    load_arrays,
    load_denoiser,
    load_recognizer,
    save_arrays,
    save_denoiser,
    save_recognizer,
)
from skelforge.denoiser import ModelConfig, init_parameters
from skelforge.diffusion import make_linear_schedule
from skelforge.errors import DataError
from skelforge.features import FEATURE_WIDTH, NormalizationStats


class TestContainer:
    def test_bitwise_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        arrays = {
            "a.weight": rng.standard_normal((4, 7)).astype(np.float32),
            "b.bias": rng.standard_normal(11).astype(np.float32),
            "scalar": np.float32(3.5).reshape(()),
        }
        config = {"kind": "test", "alpha": 1, "names": ["x", "y"]}
        path = tmp_path / "model.skdf"
        save_arrays(path, config, arrays)
        loaded_config, loaded = load_arrays(path)
        assert loaded_config == config
        for name, arr in arrays.items():
            assert loaded[name].dtype == np.float32
            assert np.array_equal(loaded[name], arr)
        # re-saving reproduces identical bytes
        path2 = tmp_path / "model2.skdf"
        save_arrays(path2, loaded_config, loaded)
        assert path.read_bytes() == path2.read_bytes()

    def test_magic_check(self, tmp_path):
        path = tmp_path / "bad.skdf"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(DataError):
            load_arrays(path)

    def test_digest_tamper_detection(self, tmp_path):
        path = tmp_path / "m.skdf"
        save_arrays(path, {"k": 1}, {"w": np.zeros(3, dtype=np.float32)})
        raw = bytearray(path.read_bytes())
        raw[44] ^= 0xFF  # flip a config byte
        path.write_bytes(bytes(raw))
        with pytest.raises(DataError):
            load_arrays(path)

    def test_trailing_bytes_rejected(self, tmp_path):
        path = tmp_path / "m.skdf"
        save_arrays(path, {"k": 1}, {})
        path.write_bytes(path.read_bytes() + b"x")
        with pytest.raises(DataError):
            load_arrays(path)

    def test_config_digest_stability(self):
        assert config_digest({"b": 1, "a": 2}) == config_digest({"a": 2, "b": 1})
        assert config_digest({"a": 1}) != config_digest({"a": 2})


class TestDenoiserCheckpoint:
    def test_round_trip_identical_outputs(self, tmp_path):
        cfg = ModelConfig(num_classes=3, d_model=16, layers=1, heads=2, max_frames=8)
        model = init_parameters(cfg, seed=4)
        schedule = make_linear_schedule(20, 1e-3, 0.1)
        stats = NormalizationStats(
            mean=np.arange(FEATURE_WIDTH, dtype=np.float64),
            std=np.ones(FEATURE_WIDTH),
        )
        path = tmp_path / "denoiser.skdf"
        save_denoiser(path, model, schedule=schedule, stats=stats, window=8)
        loaded, loaded_schedule, loaded_stats, config = load_denoiser(path)
        assert loaded.config == cfg
        assert loaded_schedule.t_steps == 20
        assert np.allclose(loaded_stats.mean, stats.mean)
        gen = torch.Generator().manual_seed(0)
        x = torch.randn(2, 8, FEATURE_WIDTH, generator=gen)
        with torch.no_grad():
            a, la = model.forward(x, torch.tensor([1, 2]), torch.tensor([0, 1]))
            b, lb = loaded.forward(x, torch.tensor([1, 2]), torch.tensor([0, 1]))
        assert torch.equal(a, b) and torch.equal(la, lb)

    def test_save_load_save_bitwise(self, tmp_path):
        cfg = ModelConfig(num_classes=2, d_model=16, layers=1, heads=2, max_frames=8)
        model = init_parameters(cfg, seed=1)
        p1, p2 = tmp_path / "a.skdf", tmp_path / "b.skdf"
        save_denoiser(p1, model, window=8)
        loaded, _, _, _ = load_denoiser(p1)
        save_denoiser(p2, loaded, window=8)
        assert p1.read_bytes() == p2.read_bytes()

    def test_wrong_kind_rejected(self, tmp_path):
        path = tmp_path / "x.skdf"
        save_arrays(path, {"kind": "other"}, {})
        with pytest.raises(DataError):
            load_denoiser(path)


class TestRecognizerCheckpoint:
    def test_round_trip(self, tmp_path):
        from skelforge.recognizer import RecognizerConfig, SkeletonRecognizer
        from skelforge.skeleton import default_skeleton

        torch.manual_seed(0)
        cfg = RecognizerConfig(num_classes=3, channels=(8, 16), epochs=1, window=8)
        model = SkeletonRecognizer(cfg, default_skeleton())
        model.is_trained = True
        path = tmp_path / "rec.skdf"
        save_recognizer(path, model)
        loaded, _ = load_recognizer(path)
        assert loaded.is_trained
        assert loaded.config == cfg
        x = torch.randn(2, 3, 8, 22, generator=torch.Generator().manual_seed(5))
        with torch.no_grad():
            model.eval()
            assert torch.equal(model(x), loaded(x))

    def test_file_digest(self, tmp_path):
        path = tmp_path / "f.skdf"
        save_arrays(path, {"kind": "x"}, {})
        assert len(file_digest(path)) == 64
