import pytest

from wordaff.config import ConfigError, PipelineConfig


class TestDefaults:
    def test_published_hyperparameters(self):
        cfg = PipelineConfig()
        assert cfg.lines.threshold == 0.1
        assert cfg.constraints.k == 6
        assert cfg.constraints.height_ratio_max == 1.25
        assert cfg.constraints.must_link_cap == 1000
        assert cfg.constraints.must_fraction == 0.6
        assert cfg.train.epochs == 100
        assert cfg.train.batch_size == 32
        assert cfg.train.learning_rate == 1e-4
        assert cfg.train.dropout_p == 0.2
        assert cfg.train.grad_clip_norm == 5
        assert cfg.train.init_std == 0.01
        assert cfg.cluster.likelihood_min == 0.75
        assert cfg.cluster.height_ratio_max == 1.25
        assert cfg.model.latent_dim == 20
        assert cfg.model.hidden_dims == (50, 2000)

    def test_seed_derivation(self):
        cfg = PipelineConfig().with_seed(10)
        assert cfg.seed == 10
        assert cfg.features.noise_seed == 11
        assert cfg.constraints.rng_seed == 12
        assert cfg.train.rng_seed == 13


class TestFileParsing:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text(
            "# comment\n"
            "seed=5\n"
            "train.epochs=7\n"
            "train.dropout_p=0.1\n"
            "lines.threshold=0.2\n"
            "features.use_external_features=false\n"
            "model.hidden_dims=10,20\n"
        )
        cfg = PipelineConfig.from_file(path)
        assert cfg.seed == 5
        assert cfg.train.epochs == 7
        assert cfg.train.dropout_p == 0.1
        assert cfg.lines.threshold == 0.2
        assert cfg.features.use_external_features is False
        assert cfg.model.hidden_dims == (10, 20)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("train.bogus=1\n")
        with pytest.raises(ConfigError, match="bogus"):
            PipelineConfig.from_file(path)

    def test_unknown_section(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("nosuch.key=1\n")
        with pytest.raises(ConfigError, match="section"):
            PipelineConfig.from_file(path)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("train.epochs\n")
        with pytest.raises(ConfigError, match="key=value"):
            PipelineConfig.from_file(path)

    def test_type_errors(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("train.epochs=soon\n")
        with pytest.raises(ConfigError, match="integer"):
            PipelineConfig.from_file(path)


class TestOverrides:
    def test_nested_override(self):
        cfg = PipelineConfig().with_overrides({"train": {"epochs": 3}, "seed": 9})
        assert cfg.train.epochs == 3
        assert cfg.seed == 9
        assert cfg.features.noise_seed == 10  # derived from the new seed

    def test_explicit_stage_seed_beats_derivation(self):
        cfg = PipelineConfig.from_dict({"seed": 5, "train": {"rng_seed": 77}})
        assert cfg.train.rng_seed == 77

    def test_bad_override(self):
        with pytest.raises(ConfigError):
            PipelineConfig().with_overrides({"train": 5})

    def test_validation_bubbles(self):
        with pytest.raises((ConfigError, ValueError)):
            PipelineConfig.from_dict({"train": {"dropout_p": 1.5}})
