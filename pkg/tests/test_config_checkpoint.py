import numpy as np
import pytest

from tryon.checkpoint import (
    CheckpointError,
    CheckpointIntegrityError,
    ConfigHashMismatchWarning,
    load_checkpoint,
    parameter_count,
    save_checkpoint,
)
from tryon.config import ConfigError, PipelineConfig


class TestPipelineConfig:
    def test_defaults_match_training_recipe(self):
        config = PipelineConfig()
        assert config.bodymap_resolution == (512, 384)
        assert config.regarsyn_resolution == (576, 432)
        assert config.desk_resolution == (96, 72)
        assert config.epochs == 40
        assert config.learning_rate == 2e-4
        assert config.adam_beta1 == 0.5
        assert config.adam_beta2 == 0.999
        assert config.clip_len_min == 8
        assert config.clip_len_max == 60

    def test_toml_round_trip_exact(self, tmp_path):
        config = PipelineConfig()
        path = tmp_path / "config.toml"
        config.save(path)
        assert PipelineConfig.load(path) == config

    def test_round_trip_preserves_custom_values(self, tmp_path):
        config = PipelineConfig(learning_rate=3.5e-5, epochs=7, seed=123, clip_len_max=12)
        path = tmp_path / "config.toml"
        config.save(path)
        again = PipelineConfig.load(path)
        assert again == config
        assert again.content_hash() == config.content_hash()

    def test_clip_bounds_validated(self):
        with pytest.raises(ConfigError):
            PipelineConfig(clip_len_min=0)
        with pytest.raises(ConfigError):
            PipelineConfig(clip_len_min=10, clip_len_max=9)

    def test_resolution_divisibility(self):
        with pytest.raises(ConfigError):
            PipelineConfig(desk_resolution=(90, 72))

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            PipelineConfig.from_dict({"leraning_rate": 1e-4})


def _weights(seed=0):
    rng = np.random.default_rng(seed)
    return {
        "encoder.w": rng.standard_normal((4, 3, 3, 3)).astype(np.float32),
        "head.b": rng.standard_normal((7,)).astype(np.float32),
    }


META = {"config_hash": "abc123", "version": "0.1.0", "seed": 5}


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path):
        path = tmp_path / "net.ckpt"
        weights = _weights()
        save_checkpoint(path, weights, dict(META))
        loaded, metadata = load_checkpoint(path)
        assert metadata["seed"] == 5
        for name, arr in weights.items():
            assert np.array_equal(loaded[name], arr)
            assert loaded[name].dtype == np.float32

    def test_parameter_count(self, tmp_path):
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, _weights(), dict(META))
        assert parameter_count(path) == 4 * 3 * 3 * 3 + 7

    def test_missing_metadata_rejected(self, tmp_path):
        with pytest.raises(CheckpointError, match="missing required keys"):
            save_checkpoint(tmp_path / "x.ckpt", _weights(), {"seed": 1})

    def test_non_float32_rejected(self, tmp_path):
        bad = {"w": np.zeros((2, 2), dtype=np.float64)}
        with pytest.raises(CheckpointError, match="float32"):
            save_checkpoint(tmp_path / "x.ckpt", bad, dict(META))

    def test_config_hash_mismatch_warns_not_fails(self, tmp_path):
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, _weights(), dict(META))
        with pytest.warns(ConfigHashMismatchWarning):
            loaded, _ = load_checkpoint(path, expected_config_hash="other")
        assert set(loaded) == set(_weights())

    def test_matching_hash_no_warning(self, tmp_path):
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, _weights(), dict(META))
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("error")
            load_checkpoint(path, expected_config_hash="abc123")

    def test_truncated_file_rejected_without_partial_state(self, tmp_path):
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, _weights(), dict(META))
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(CheckpointIntegrityError):
            load_checkpoint(path)

    def test_corrupt_payload_rejected(self, tmp_path):
        path = tmp_path / "net.ckpt"
        save_checkpoint(path, _weights(), dict(META))
        raw = bytearray(path.read_bytes())
        raw[-3] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointIntegrityError, match="hash mismatch"):
            load_checkpoint(path)
