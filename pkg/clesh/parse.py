from __future__ import annotations

import dataclasses
import logging
import os
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import DatasetError

logger = logging.getLogger(__name__)

MIN_SAMPLES = 3


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True)
class DatasetBundle:
    feature_names: Tuple[str, ...]
    label_name: str
    features: np.ndarray
    shap_values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "features", _frozen(self.features))
        object.__setattr__(self, "shap_values", _frozen(self.shap_values))
        if self.features.ndim != 2 or self.shap_values.ndim != 2:
            raise DatasetError("features and SHAP values must be 2-D matrices")
        if self.features.shape != self.shap_values.shape:
            raise DatasetError(
                f"dimension mismatch: features are {self.features.shape[0]}x"
                f"{self.features.shape[1]}, SHAP values are "
                f"{self.shap_values.shape[0]}x{self.shap_values.shape[1]}"
            )
        _check_names(self.feature_names, "feature names")
        if len(self.feature_names) != self.n_features:
            raise DatasetError(
                f"{len(self.feature_names)} feature names for {self.n_features} columns"
            )
        if self.n_samples < MIN_SAMPLES:
            raise DatasetError(
                f"at least {MIN_SAMPLES} samples are required, got {self.n_samples}"
            )
        _check_finite(self.features, self.feature_names, "features")
        _check_finite(self.shap_values, self.feature_names, "SHAP values")

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def column(self, feature: int) -> np.ndarray:
        return self.features[:, feature]

    def shap_column(self, feature: int) -> np.ndarray:
        return self.shap_values[:, feature]

    def index_of(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise DatasetError(f"unknown feature {name!r}") from None


def _check_names(names: Sequence[str], what: str) -> None:
    seen = set()
    for position, name in enumerate(names, start=1):
        if not str(name).strip():
            raise DatasetError(f"{what}: empty header in column {position}")
        if name in seen:
            raise DatasetError(
                f"{what}: duplicate header {name!r} in column {position}"
            )
        seen.add(name)


def _check_finite(values: np.ndarray, names: Sequence[str], what: str) -> None:
    bad = np.argwhere(~np.isfinite(values))
    if len(bad):
        row, col = (int(v) for v in bad[0])
        raise DatasetError(
            f"{what}: non-finite value {values[row, col]} at row {row + 1}, "
            f"column {names[col]!r}"
        )


def _read_csv(path: str, what: str) -> Tuple[List[str], np.ndarray]:
    """Header names and the numeric matrix; line numbers in errors are 1-based
    file lines (the header is line 1)."""
    if not os.path.exists(path):
        raise DatasetError(f"{what} file {path} does not exist")
    try:
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetError(f"{path}: cannot parse {what} file: {e}") from None
    raw = raw.fillna("")
    if raw.shape[0] < 1:
        raise DatasetError(f"{path}: missing header row")
    header = [str(v).strip() for v in raw.iloc[0]]
    _check_names(header, f"{path}")

    body = raw.iloc[1:].reset_index(drop=True)
    values = np.empty(body.shape, dtype=float)
    for col, name in enumerate(header):
        cells = body.iloc[:, col].str.strip()
        numeric = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(np.isnan(numeric) & (cells.str.lower() != "nan"))
        if len(bad):
            row = int(bad[0])
            cell = cells.iloc[row]
            problem = "missing value" if cell == "" else f"non-numeric cell {cell!r}"
            raise DatasetError(f"{path}: {problem} at line {row + 2}, column {name!r}")
        values[:, col] = numeric
    return header, values


def _reject_non_finite(
    path: str, header: Sequence[str], values: np.ndarray, what: str
) -> None:
    bad = np.argwhere(~np.isfinite(values))
    if len(bad):
        row, col = (int(v) for v in bad[0])
        raise DatasetError(
            f"{path}: non-finite {what} value at line {row + 2}, column {header[col]!r}"
        )


def _read_npy(path: str, n_features: int) -> np.ndarray:
    try:
        values = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as e:
        raise DatasetError(f"{path}: cannot load SHAP array: {e}") from None
    if values.ndim != 2:
        raise DatasetError(
            f"{path}: expected a 2-D SHAP matrix, got {values.ndim} dimensions"
        )
    if values.shape[1] != n_features:
        raise DatasetError(
            f"dimension mismatch: features have {n_features} columns, "
            f"SHAP array has {values.shape[1]}"
        )
    return np.asarray(values, dtype=float)


def align_shap_columns(
    feature_header: Sequence[str], shap_header: Sequence[str], shap_path: str
) -> List[int]:
    """Index of each feature column within the SHAP file."""
    missing = [name for name in feature_header if name not in shap_header]
    extra = [name for name in shap_header if name not in feature_header]
    if missing or extra:
        raise DatasetError(
            f"{shap_path}: SHAP headers do not match feature headers "
            f"(missing {missing}, unexpected {extra})"
        )
    return [list(shap_header).index(name) for name in feature_header]


def load_dataset(features_path: str, shap_path: str, label_name: str) -> DatasetBundle:
    header, features = _read_csv(features_path, "features")
    _reject_non_finite(features_path, header, features, "feature")

    if shap_path.endswith(".npy"):
        shap_values = _read_npy(shap_path, len(header))
    else:
        shap_header, shap_raw = _read_csv(shap_path, "SHAP")
        _reject_non_finite(shap_path, shap_header, shap_raw, "SHAP")
        if len(shap_header) != len(header):
            raise DatasetError(
                f"dimension mismatch: {features_path} has {len(header)} columns, "
                f"{shap_path} has {len(shap_header)}"
            )
        order = align_shap_columns(header, shap_header, shap_path)
        if order != list(range(len(order))):
            logger.info("reordering SHAP columns to match %s", features_path)
        shap_values = shap_raw[:, order]

    if features.shape[0] != shap_values.shape[0]:
        raise DatasetError(
            f"dimension mismatch: {features_path} has {features.shape[0]} rows, "
            f"{shap_path} has {shap_values.shape[0]} rows"
        )
    bundle = DatasetBundle(
        feature_names=tuple(header),
        label_name=label_name,
        features=features,
        shap_values=shap_values,
    )
    logger.info(
        "loaded %d samples x %d features from %s",
        bundle.n_samples,
        bundle.n_features,
        features_path,
    )
    return bundle


def bundle_from_frames(
    features: Any,
    shap_values: Any,
    label_name: str,
    feature_names: Optional[Sequence[str]] = None,
) -> DatasetBundle:
    """Bundle from in-memory data: a DataFrame (or 2-D array) plus SHAP values."""
    frame = pd.DataFrame(features)
    if feature_names is None:
        feature_names = [str(c) for c in frame.columns]
    try:
        values = frame.to_numpy(dtype=float)
    except (TypeError, ValueError) as e:
        raise DatasetError(f"features must be numeric: {e}") from None
    if isinstance(shap_values, pd.DataFrame):
        order = align_shap_columns(
            list(feature_names), [str(c) for c in shap_values.columns], "SHAP frame"
        )
        shap = shap_values.to_numpy(dtype=float)[:, order]
    else:
        shap = np.asarray(shap_values, dtype=float)
    return DatasetBundle(
        feature_names=tuple(feature_names),
        label_name=label_name,
        features=values,
        shap_values=shap,
    )


def write_dataset(bundle: DatasetBundle, features_path: str, shap_path: str) -> None:
    outputs = ((features_path, bundle.features), (shap_path, bundle.shap_values))
    for path, values in outputs:
        pd.DataFrame(values, columns=list(bundle.feature_names)).to_csv(
            path, index=False, float_format="%.17g", encoding="utf-8"
        )
