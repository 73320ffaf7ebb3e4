import os
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pytest

from clesh.config import Config
from clesh.parse import DatasetBundle
from clesh.synthetic import make_synthetic_bundle

BundleFactory = Callable[..., DatasetBundle]


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="module")
def synthetic_bundle() -> DatasetBundle:
    return make_synthetic_bundle(500, seed=0)


def bundle_of(
    features: np.ndarray,
    shap_values: np.ndarray,
    names: Optional[Sequence[str]] = None,
    label: str = "Outcome",
) -> DatasetBundle:
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
        shap_values = np.asarray(shap_values, dtype=float)[:, None]
    if names is None:
        names = [f"f{i}" for i in range(features.shape[1])]
    return DatasetBundle(
        feature_names=tuple(names),
        label_name=label,
        features=features,
        shap_values=np.asarray(shap_values, dtype=float),
    )


@pytest.fixture
def make_bundle() -> BundleFactory:
    return bundle_of


@pytest.fixture
def output_config(tmp_path: Path) -> Config:
    return Config(output_dir=os.path.join(str(tmp_path), "out"))
