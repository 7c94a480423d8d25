"""Tests for experiment config parsing, validation and hashing."""

import json
from pathlib import Path

import pytest

from utils.config import (
    Ablation,
    ExperimentConfig,
    Metric,
    TrainConfig,
    config_hash,
    edit_distance,
    nearest_key,
    parse_config,
    stage_seed,
    validate_config,
    with_seed,
)
from utils.errors import ValidationError

TOY_CONFIG = Path(__file__).parent.parent / "configs" / "toy.json"


def test_minimal_config_gets_defaults():
    """Test that a config holding only the seed resolves every default."""
    config = parse_config('{"seed": 4}')

    assert config.seed == 4
    assert config.translation.lambdas == (10.0, 10.0, 5.0)
    assert config.translation.ablation == Ablation.MASK_FULL
    assert config.evaluation.metric == Metric.COSINE
    assert config.train.translation.learning_rate == 2e-4
    assert config.data.target_cameras == 2


def test_missing_seed():
    """Test that a config without a seed names the missing field."""
    with pytest.raises(ValidationError, match="missing required field 'seed'"):
        parse_config("{}")


def test_unknown_key_suggests_nearest():
    """Test that an unknown nested key reports its line and the closest valid key."""
    text = '{\n  "seed": 0,\n  "translation": {\n    "lambda": [1, 2, 3]\n  }\n}'

    with pytest.raises(ValidationError, match=r"<config>:4: unknown key 'translation.lambda' \(did you mean 'lambdas'\?\)"):
        parse_config(text)


def test_type_errors_name_the_field():
    """Test that a wrongly typed value reports its dotted path and line."""
    text = '{\n  "seed": 0,\n  "data": {\n    "identities": "many"\n  }\n}'

    with pytest.raises(ValidationError, match=r"<config>:4: data.identities must be an integer"):
        parse_config(text)


def test_range_errors():
    """Test that out-of-range values are rejected with the section name."""
    with pytest.raises(ValidationError, match="lambdas"):
        parse_config('{"seed": 0, "translation": {"lambdas": [1, 2]}}')
    with pytest.raises(ValidationError, match="must differ"):
        parse_config('{"seed": 0, "evaluation": {"probe_camera": 1, "gallery_camera": 1}}')
    with pytest.raises(ValidationError, match="one of cosine, euclidean"):
        parse_config('{"seed": 0, "evaluation": {"metric": "manhattan"}}')


def test_json_syntax_error_line():
    """Test that malformed JSON reports the offending line."""
    with pytest.raises(ValidationError, match="cfg.json:3"):
        parse_config('{\n  "seed": 0,\n  oops\n}', "cfg.json")


def test_train_seed_not_in_file_schema():
    """Test that per-stage training seeds cannot be set in the file."""
    with pytest.raises(ValidationError, match="unknown key 'train.reid.seed'"):
        parse_config('{"seed": 0, "train": {"reid": {"seed": 3}}}')


def test_shipped_toy_config(tmp_path):
    """Test that the toy config validates and survives a dict round trip."""
    config = validate_config(TOY_CONFIG)
    (tmp_path / "resolved.json").write_text(json.dumps(config.to_dict()))

    assert validate_config(tmp_path / "resolved.json") == config


def test_unreadable_config(tmp_path):
    """Test that a missing config file raises a validation error."""
    with pytest.raises(ValidationError, match="Cannot read config"):
        validate_config(tmp_path / "missing.json")


def test_train_config_ranges():
    """Test TrainConfig's own range checks."""
    with pytest.raises(ValidationError, match="learning_rate"):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValidationError, match="batch_size"):
        TrainConfig(batch_size=0)


def test_train_config_epochs():
    """Test that zero epochs is a valid no-op run and negative epochs are rejected."""
    assert TrainConfig(epochs=0).epochs == 0

    with pytest.raises(ValidationError, match=r"epochs=-1 must be >= 0"):
        TrainConfig(epochs=-1)


def test_config_hash_stable():
    """Test that equal configs hash equally and any change alters the hash."""
    a = ExperimentConfig(seed=1)

    assert config_hash(a) == config_hash(parse_config('{"seed": 1}'))
    assert config_hash(a) != config_hash(ExperimentConfig(seed=2))
    assert config_hash(a.data, "gen-data") != config_hash(a.data, "gen-target")


def test_stage_seeds():
    """Test that stage seeds are deterministic and differ between stages and experiment seeds."""
    config = ExperimentConfig(seed=3)

    assert stage_seed(config, "reid") == stage_seed(ExperimentConfig(seed=3), "reid")
    assert stage_seed(config, "reid") != stage_seed(config, "illum")
    assert stage_seed(config, "reid") != stage_seed(ExperimentConfig(seed=4), "reid")
    assert with_seed(TrainConfig(), 9).seed == 9


def test_edit_distance():
    """Test Levenshtein distances and nearest-key lookup."""
    assert edit_distance("kitten", "sitting") == 3
    assert edit_distance("", "abc") == 3
    assert nearest_key("seeed", ["seed", "selection"]) == "seed"
    assert nearest_key("x", []) is None
