import os
from pathlib import Path

import pandas as pd

from clesh import clesh
from clesh.config import Config
from clesh.notes import NoteKind
from clesh.parse import DatasetBundle
from clesh.pipeline import run_analysis
from clesh.report import MANIFEST, REPORT_MD
from clesh.synthetic import LABEL
from clesh.univariate import is_significant


def test_synthetic_patterns_are_found(synthetic_bundle: DatasetBundle) -> None:
    analysis = run_analysis(synthetic_bundle, Config())
    names = [synthetic_bundle.feature_names[i] for i in analysis.important]
    assert len(names) == analysis.cuts.chosen_k
    found = {f.feature_name: f for f in analysis.univariate}
    for name in ("age", "glucose", "smoker", "activity", "albuminuria"):
        assert name in found
        assert is_significant(found[name], Config().p_univariate)
    partners = {f.target_name: f.partner_name for f in analysis.interactions}
    assert partners["albuminuria"] == "triglycerides"
    stages = [n.text for _, n in analysis.notes.entries if n.kind is NoteKind.STAGE]
    assert stages[1:] == ["univariate analysis", "interaction analysis"]


def test_threads_do_not_change_results(synthetic_bundle: DatasetBundle) -> None:
    one = run_analysis(synthetic_bundle, Config(), threads=1)
    four = run_analysis(synthetic_bundle, Config(), threads=4)
    assert one.important == four.important
    assert one.n_significant_univariate() == four.n_significant_univariate()
    partners = [f.partner for f in one.interactions]
    assert partners == [f.partner for f in four.interactions]
    assert one.notes.render() == four.notes.render()


def test_clesh_api(synthetic_bundle: DatasetBundle, tmp_path: Path) -> None:
    features = pd.DataFrame(
        synthetic_bundle.features, columns=synthetic_bundle.feature_names
    )
    shap = pd.DataFrame(
        synthetic_bundle.shap_values[:, ::-1],
        columns=synthetic_bundle.feature_names[::-1],
    )
    out = str(tmp_path / "out")
    analysis = clesh(features, shap, LABEL, Config(output_dir=out, manual_num=4))
    assert len(analysis.important) == 4
    assert analysis.bundle.feature_names == synthetic_bundle.feature_names
    assert (analysis.bundle.shap_values == synthetic_bundle.shap_values).all()
    assert os.path.exists(os.path.join(out, REPORT_MD))
    assert os.path.exists(os.path.join(out, MANIFEST))
