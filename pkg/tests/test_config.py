import os

import pytest

from app.domain.network.entity import BiMambaVariant
from app.infrastructure.config import (
    RunConfig,
    dump_run_config,
    load_config,
    load_cost_model,
    load_run_config,
    parse_run_config,
    variant_names,
)
from app.infrastructure.storage.run_directory import RESOLVED_CONFIG, write_resolved_config
from app.shared.errors import ConfigError, InvalidCostModelError

CONFIGS = os.path.join(os.path.dirname(os.path.dirname(__file__)), "configs")


class TestEnvironmentConfig:
    def test_defaults(self, monkeypatch):
        for name in ("LOG_LEVEL", "RUNS_ROOT", "ENABLE_METRICS", "TORCH_NUM_THREADS"):
            monkeypatch.delenv(name, raising=False)
        config = load_config()
        assert config.log_level == "INFO"
        assert config.runs_root == "runs"
        assert config.enable_metrics is True
        assert config.torch_num_threads == 1

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv("LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("ENABLE_METRICS", "False")
        monkeypatch.setenv("TORCH_NUM_THREADS", "4")
        config = load_config()
        assert config.log_level == "DEBUG"
        assert config.enable_metrics is False
        assert config.torch_num_threads == 4


class TestParseRunConfig:
    """Sectioned key=value run configuration"""

    def test_empty_gives_defaults(self):
        assert parse_run_config("") == RunConfig()

    def test_values(self):
        config = parse_run_config(
            "[model]\nd_model = 16\nvariant = inn\nclass_weights = 0.9, 0.1\n"
            "[train]\nlr = 1e-3\n"
        )
        assert config.model.d_model == 16
        assert config.model.variant is BiMambaVariant.INN
        assert config.model.class_weights == (0.9, 0.1)
        assert config.train.lr == 1e-3

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="d_modle"):
            parse_run_config("[model]\nd_modle = 16\n")

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            parse_run_config("[optimizer]\nlr = 1\n")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="model.n_blocks"):
            parse_run_config("[model]\nn_blocks = 0\n")

    def test_syntax_error(self):
        with pytest.raises(ConfigError):
            parse_run_config("d_model = 16\n")

    def test_override_wins(self):
        config = parse_run_config("[model]\nd_model = 16\n", ["model.d_model=32"])
        assert config.model.d_model == 32

    def test_override_adds_section(self):
        config = parse_run_config("", ["bench.runs=2"])
        assert config.bench.runs == 2

    @pytest.mark.parametrize("override", ["d_model=3", "model.d_model", "model.=3"])
    def test_malformed_override(self, override):
        with pytest.raises(ConfigError, match="section.key=value"):
            parse_run_config("", [override])

    def test_seed_propagates_to_model(self):
        assert parse_run_config("[run]\nseed = 7\n").model.seed == 7

    def test_model_seed_kept(self):
        config = parse_run_config("[run]\nseed = 7\n[model]\nseed = 3\n")
        assert config.model.seed == 3
        assert config.run.seed == 7

    def test_unknown_bench_system(self):
        with pytest.raises(ConfigError, match="conformer"):
            parse_run_config("", ["bench.systems=trunk, conformer"])

    def test_empty_augment_range(self):
        with pytest.raises(ConfigError):
            parse_run_config("", ["augment.stationary_snr_db=40, 10"])

    def test_variants(self):
        config = parse_run_config("", ["run.variants=inn, dua"])
        assert variant_names(config) == ["inn", "dua"]

    def test_shipped_configs_parse(self):
        for name in ("tiny.cfg", "published.cfg", "sweep.cfg"):
            load_run_config(os.path.join(CONFIGS, name))
        tiny = load_run_config(os.path.join(CONFIGS, "tiny.cfg"))
        assert (tiny.model.d_model, tiny.model.n_blocks) == (16, 2)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            load_run_config(str(tmp_path / "absent.cfg"))


class TestDumpRunConfig:
    def test_resolved_config_reparses(self, tmp_path):
        config = parse_run_config(
            "",
            [
                "model.d_model=16",
                "model.class_weights=0.25, 0.75",
                "augment.mode=la",
                "bench.durations=2, 4.5",
                "run.variants=ext, dua",
                "data.train_manifest=data/train.lst",
            ],
        )
        path = write_resolved_config(str(tmp_path), config)
        assert path == str(tmp_path / RESOLVED_CONFIG)
        assert load_run_config(path) == config

    def test_none_values_left_out(self):
        text = dump_run_config(RunConfig())
        assert "class_weights" not in text
        assert "train_manifest" not in text
        assert "[model]" in text and "[run]" in text


class TestCostModel:
    def test_shipped_cost_model(self):
        model = load_cost_model(os.path.join(CONFIGS, "tdcf_asvspoof2021.cfg"))
        assert model.p_spoof == 0.05
        assert model.c_fa == 10.0
        assert model.asv_p_fa_spoof == 0.35

    def test_priors_must_sum_to_one(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[tdcf]\np_tar = 0.5\np_non = 0.5\np_spoof = 0.5\n")
        with pytest.raises(InvalidCostModelError, match="priors must sum to 1"):
            load_cost_model(str(path))

    def test_negative_cost(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[tdcf]\nc_miss = -1\n")
        with pytest.raises(InvalidCostModelError):
            load_cost_model(str(path))

    def test_wrong_section(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("[model]\nd_model = 4\n")
        with pytest.raises(ConfigError, match=r"\[tdcf\]"):
            load_cost_model(str(path))
