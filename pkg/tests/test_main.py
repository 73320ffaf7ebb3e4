import dataclasses
import os
from pathlib import Path
from typing import List

import pytest

from clesh import main as cli
from clesh.parse import write_dataset
from clesh.synthetic import LABEL, make_synthetic_bundle


@pytest.fixture(scope="module")
def dataset(tmp_path_factory: pytest.TempPathFactory) -> List[str]:
    root = tmp_path_factory.mktemp("data")
    features, shap = str(root / "features.csv"), str(root / "shap.csv")
    write_dataset(make_synthetic_bundle(200, seed=1), features, shap)
    return ["--features", features, "--shap", shap, "--label", LABEL, "--threads", "1"]


def test_successful_run(
    dataset: List[str], tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    out = str(tmp_path / "out")
    assert cli.main(dataset + ["--output-dir", out]) == cli.EXIT_OK
    printed = capsys.readouterr().out
    assert "important features: " in printed
    assert f"output: {out}" in printed
    assert os.path.exists(os.path.join(out, "report.md"))
    assert os.path.exists(os.path.join(out, "manifest.json"))


def test_missing_input(
    dataset: List[str], tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    out = str(tmp_path / "out")
    argv = list(dataset)
    argv[argv.index("--shap") + 1] = str(tmp_path / "missing.csv")
    assert cli.main(argv + ["--output-dir", out]) == cli.EXIT_INPUT
    assert "does not exist" in capsys.readouterr().err
    assert not os.path.exists(out)


def test_bad_config_value(dataset: List[str], tmp_path: Path) -> None:
    out = str(tmp_path / "out")
    argv = dataset + ["--output-dir", out, "--p-univariate", "2"]
    assert cli.main(argv) == cli.EXIT_INPUT
    assert not os.path.exists(out)


def test_foreign_output_dir(dataset: List[str], tmp_path: Path) -> None:
    (tmp_path / "keep.txt").write_text("x")
    assert cli.main(dataset + ["--output-dir", str(tmp_path)]) == cli.EXIT_INPUT
    assert os.listdir(tmp_path) == ["keep.txt"]


def test_dry_run(
    dataset: List[str], tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    out = str(tmp_path / "out")
    assert cli.main(dataset + ["--output-dir", out, "--dry-run"]) == cli.EXIT_OK
    printed = capsys.readouterr().out
    assert "cut positions: " in printed
    assert "chosen k: " in printed
    assert not os.path.exists(out)


def test_manual_num(dataset: List[str], tmp_path: Path) -> None:
    out = str(tmp_path / "out")
    args = cli.parse_args(dataset + ["--output-dir", out, "--manual-num", "3"])
    summary = cli.run_pipeline(args)
    assert summary.exit_code == cli.EXIT_OK
    assert summary.n_important == 3


def test_analysis_failure(
    dataset: List[str],
    tmp_path: Path,
    monkeypatch: pytest.MonkeyPatch,
    capsys: pytest.CaptureFixture[str],
) -> None:
    def boom(*args: object, **kwargs: object) -> None:
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "run_analysis", boom)
    out = str(tmp_path / "out")
    assert cli.main(dataset + ["--output-dir", out]) == cli.EXIT_ANALYSIS
    assert "analysis failed: boom" in capsys.readouterr().err


def test_runs_are_reproducible(dataset: List[str], tmp_path: Path) -> None:
    argv = dataset + ["--output-dir", str(tmp_path / "out")]
    first = cli.run_pipeline(cli.parse_args(argv))
    second = cli.run_pipeline(cli.parse_args(argv))
    assert first.exit_code == cli.EXIT_OK
    assert dataclasses.replace(first, elapsed=0.0) == dataclasses.replace(
        second, elapsed=0.0
    )


def test_config_file_and_flags(dataset: List[str], tmp_path: Path) -> None:
    path = tmp_path / "clesh.json5"
    path.write_text("{manual_num: 5, p_univariate: 0.01}")
    out = str(tmp_path / "o")
    args = cli.parse_args(
        dataset + ["--config", str(path), "--manual-num", "2", "--output-dir", out]
    )
    assert cli.overrides_from_args(args) == {
        "manual_num": "2",
        "output_dir": out,
    }
    assert cli.run_pipeline(args).n_important == 2
