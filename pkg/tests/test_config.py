import os
from pathlib import Path

import pytest

from clesh.config import DEFAULT_OUTPUT_DIR, Config, config_keys, load_config
from clesh.errors import ConfigError


def test_defaults() -> None:
    config = load_config()
    assert config == Config()
    assert config.candidate_num_min == 10
    assert config.candidate_num_max == 20
    assert config.cont_bound == 10
    assert config.manual_num is None
    assert config.p_feature_selection == 0.05
    assert config.p_univariate == config.p_interaction == 0.05
    assert config.output_dir == DEFAULT_OUTPUT_DIR
    assert config.interaction_top_k == 1
    assert not config.strict_paired_nonparametric


@pytest.mark.parametrize(
    "values,message",
    [
        ({"candidate_num_min": 0}, "candidate_num_min"),
        ({"candidate_num_min": 21}, "must not exceed"),
        ({"p_univariate": 1.0}, "p_univariate"),
        ({"p_interaction": 0.0}, "p_interaction"),
        ({"manual_num": -3}, "manual_num"),
        ({"rng_seed": -1}, "rng_seed"),
        ({"interaction_top_k": 0}, "interaction_top_k"),
        ({"output_dir": ""}, "output_dir"),
    ],
)
def test_invalid_values(values: dict, message: str) -> None:
    with pytest.raises(ConfigError, match=message):
        Config(**values)


def test_json5_file_and_overrides(tmp_path: Path) -> None:
    path = os.path.join(str(tmp_path), "clesh.json5")
    with open(path, "w") as f:
        f.write(
            "{\n  // stricter\n  p_univariate: 0.01,\n  manual_num: 15,\n  html: true,\n}\n"
        )
    config = load_config(path, {"manual_num": "12", "cont-bound": "7"})
    assert config.p_univariate == 0.01
    assert config.manual_num == 12
    assert config.cont_bound == 7
    assert config.html


def test_key_value_file(tmp_path: Path) -> None:
    path = os.path.join(str(tmp_path), "clesh.conf")
    with open(path, "w") as f:
        f.write("# comment\np_interaction = 0.1\nstrict_paired_nonparametric = yes\n")
        f.write("output_dir = 'results'  # trailing\nmanual_num = 0\n")
    config = load_config(path)
    assert config.p_interaction == 0.1
    assert config.strict_paired_nonparametric
    assert config.output_dir == "results"
    assert config.manual_num is None


@pytest.mark.parametrize(
    "content,message",
    [
        ("p_univariate = 0.1\np_univariate = 0.2\n", "duplicate key"),
        ("no_such_key = 1\n", "unknown configuration key"),
        ("cont_bound\n", "expected 'key = value'"),
        ("cont_bound = 2.5\n", "expected an integer"),
        ("html = maybe\n", "expected a boolean"),
        ("p_univariate = low\n", "expected a number"),
    ],
)
def test_bad_key_value_files(tmp_path: Path, content: str, message: str) -> None:
    path = os.path.join(str(tmp_path), "bad.conf")
    with open(path, "w") as f:
        f.write(content)
    with pytest.raises(ConfigError, match=message):
        load_config(path)


def test_nested_json5_is_rejected(tmp_path: Path) -> None:
    path = os.path.join(str(tmp_path), "bad.json5")
    with open(path, "w") as f:
        f.write("{cont_bound: [1, 2]}")
    with pytest.raises(ConfigError, match="scalar"):
        load_config(path)


def test_missing_file() -> None:
    with pytest.raises(ConfigError, match="does not exist"):
        load_config("/nonexistent/clesh.json5")


def test_snapshot_lists_every_key() -> None:
    assert sorted(Config().snapshot()) == sorted(config_keys())
