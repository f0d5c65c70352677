import json
import os

import pytest

from src.utils.config_loader import (
    DEFAULT_OUTPUT_DIR,
    EFFECTIVE_CONFIG_NAME,
    OUTPUT_DIR_ENV,
    PROFILE_ENV,
    ConfigError,
    RunConfig,
    config_from_dict,
    dump_config,
    flags_to_overrides,
    load_config,
    parse_overrides,
)


@pytest.fixture
def profile_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({
        "default_profile": "dev",
        "dev": {"agent": {"gamma": 0.8}, "pipeline": {"max_epoch": 5}},
        "prod": {"agent": {"gamma": 0.95}, "pipeline": {"max_epoch": 300}},
    }), encoding="utf-8")
    return str(path)


def test_defaults(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    config = RunConfig()
    config.validate()
    assert config.agent.gamma == 0.9
    assert config.agent.epsilon == 0.1
    assert config.agent.batch_size == 16
    assert config.agent.real_buffer_size == 2000
    assert config.world_model.hidden_size == 160
    assert config.switcher.encoder_size == 80
    assert config.switcher.hidden_size == 126
    assert config.sampler.prefill == 5
    assert config.pipeline.max_planning_dialogues == 30
    assert config.pipeline.variants == ["DQN", "DQN(5)", "DDQ(5)", "Switch-DDQ"]
    assert config.output_dir == DEFAULT_OUTPUT_DIR


def test_output_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert RunConfig().output_dir == str(tmp_path)


def test_gamma_out_of_range_names_key():
    with pytest.raises(ConfigError) as exc_info:
        load_config(flags={"gamma": 1.5})
    assert str(exc_info.value) == "agent.gamma: gamma must be in [0,1]"
    assert exc_info.value.path == "agent.gamma"


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError) as exc_info:
        config_from_dict({"agent": {"gama": 0.5}})
    assert exc_info.value.path == "agent.gama"


def test_type_mismatch_is_rejected():
    with pytest.raises(ConfigError) as exc_info:
        config_from_dict({"agent": {"batch_size": "big"}})
    assert "expected int" in str(exc_info.value)
    with pytest.raises(ConfigError):
        config_from_dict({"pipeline": {"seeds": 3}})


def test_bad_variant_is_a_config_error():
    with pytest.raises(ConfigError) as exc_info:
        config_from_dict({"pipeline": {"variants": ["DQN", "A3C"]}})
    assert exc_info.value.path == "pipeline.variants"


def test_flags_override_file_and_set_overrides_flags(profile_file):
    config = load_config(profile_file, flags={"gamma": 0.5, "epochs": 7})
    assert config.agent.gamma == 0.5
    assert config.pipeline.max_epoch == 7

    config = load_config(profile_file, overrides=["agent.gamma=0.25"], flags={"gamma": 0.5})
    assert config.agent.gamma == 0.25


def test_default_profile_is_used(profile_file, monkeypatch):
    monkeypatch.delenv(PROFILE_ENV, raising=False)
    config = load_config(profile_file)
    assert config.agent.gamma == 0.8
    assert config.pipeline.max_epoch == 5


def test_profile_from_environment(profile_file, monkeypatch):
    monkeypatch.setenv(PROFILE_ENV, "prod")
    assert load_config(profile_file).agent.gamma == 0.95


def test_unknown_profile_falls_back_to_default(profile_file, monkeypatch):
    monkeypatch.setenv(PROFILE_ENV, "staging")
    assert load_config(profile_file).agent.gamma == 0.8


def test_flat_file_without_profiles(tmp_path):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({"agent": {"epsilon": 0.2}}), encoding="utf-8")
    assert load_config(str(path)).agent.epsilon == 0.2


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))


def test_parse_overrides():
    nested = parse_overrides(['pipeline.variants=["DQN","DDQ(2)"]', "agent.lr_note=fast", "pipeline.seeds=[4]"])
    assert nested == {
        "pipeline": {"variants": ["DQN", "DDQ(2)"], "seeds": [4]},
        "agent": {"lr_note": "fast"},
    }
    with pytest.raises(ConfigError):
        parse_overrides(["agent.gamma"])


def test_flags_to_overrides_skips_missing():
    assert flags_to_overrides({"gamma": 0.5, "epsilon": None, "seeds": [1, 2]}) == [
        "agent.gamma=0.5",
        "pipeline.seeds=[1, 2]",
    ]


def test_dump_config_round_trip(tmp_path):
    config = config_from_dict({"agent": {"gamma": 0.7}, "output_dir": str(tmp_path)})
    path = dump_config(config, str(tmp_path))
    assert os.path.basename(path) == EFFECTIVE_CONFIG_NAME
    with open(path, "r", encoding="utf-8") as f:
        restored = config_from_dict(json.load(f))
    assert restored == config


def test_dump_config_names_per_command(tmp_path):
    config = RunConfig()
    train_path = dump_config(config, str(tmp_path), command="train")
    chat_path = dump_config(config, str(tmp_path), command="chat")
    assert os.path.basename(train_path) == EFFECTIVE_CONFIG_NAME
    assert os.path.basename(chat_path) == "effective_config_chat.json"
    assert sorted(os.listdir(tmp_path)) == ["effective_config.json", "effective_config_chat.json"]


def test_profile_choice_is_logged(profile_file, monkeypatch, caplog):
    monkeypatch.delenv(PROFILE_ENV, raising=False)
    with caplog.at_level("INFO", logger="src.utils.config_loader"):
        load_config(str(profile_file))
    assert "使用配置档 dev" in caplog.text
