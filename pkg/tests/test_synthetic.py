import numpy as np

from clesh.config import Config
from clesh.interaction import approximate_interactions
from clesh.parse import DatasetBundle
from clesh.selection import Kind, classify_feature_kind
from clesh.synthetic import LABEL, make_synthetic_bundle


def test_shape_and_names() -> None:
    bundle = make_synthetic_bundle(120, seed=3)
    assert bundle.features.shape == (120, 15)
    assert bundle.label_name == LABEL
    assert bundle.feature_names[:7] == (
        "age",
        "bmi",
        "glucose",
        "smoker",
        "activity",
        "triglycerides",
        "albuminuria",
    )


def test_deterministic() -> None:
    a = make_synthetic_bundle(100, seed=7)
    b = make_synthetic_bundle(100, seed=7)
    c = make_synthetic_bundle(100, seed=8)
    assert np.array_equal(a.shap_values, b.shap_values)
    assert not np.array_equal(a.shap_values, c.shap_values)


def test_feature_kinds(synthetic_bundle: DatasetBundle) -> None:
    kinds = [
        classify_feature_kind(synthetic_bundle.column(i), Config().cont_bound).kind
        for i in range(4)
    ] + [classify_feature_kind(synthetic_bundle.column(6), Config().cont_bound).kind]
    assert kinds == [
        Kind.CONTINUOUS,
        Kind.CONTINUOUS,
        Kind.CONTINUOUS,
        Kind.BINARY,
        Kind.DISCRETE,
    ]


def test_planted_interaction(synthetic_bundle: DatasetBundle) -> None:
    assert approximate_interactions(6, synthetic_bundle).partner == 5
