from __future__ import annotations

import dataclasses
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from shapstats import curves, shapiro, significance
from shapstats.curves import FitSelection
from shapstats.errors import DegenerateSample
from shapstats.significance import TestName, TestResult, TMode

from .config import Config
from .parse import DatasetBundle
from .selection import FeatureKind, Kind

logger = logging.getLogger(__name__)

MIN_CATEGORY_SIZE = 3


def format_category(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return f"{value:g}"


@dataclasses.dataclass(frozen=True)
class CategoryStat:
    value: float
    label: str
    n: int
    mean_shap: float
    zero_test: Optional[TestResult]

    @property
    def excluded(self) -> bool:
        return self.zero_test is None


@dataclasses.dataclass(frozen=True)
class CategoryComparison:
    """Zero-mean tests per category plus the between-category test.

    Two-category (binary) comparisons use the two-sample route; anything
    with more categories uses the omnibus route, followed by Tukey HSD when
    the omnibus test is significant and at least 3 categories are usable.
    """

    kind: Kind
    per_category: List[CategoryStat]
    between: Optional[TestResult]
    posthoc: Optional[List[TestResult]]
    untestable: str = ""

    @property
    def excluded(self) -> List[CategoryStat]:
        return [c for c in self.per_category if c.excluded]


def _all_normal(groups: Sequence[np.ndarray], alpha: float) -> bool:
    return all(shapiro.normality_gate(g, alpha).is_normal for g in groups)


def zero_mean_test(shap: np.ndarray, alpha: float) -> TestResult:
    if shapiro.normality_gate(shap, alpha).is_normal:
        return significance.t_test(TMode.ONE_SAMPLE, shap, 0.0)
    try:
        return significance.signed_rank_test(shap, 0.0)
    except DegenerateSample as e:
        logger.debug("zero-mean test: %s", e)
        return TestResult(
            TestName.SIGNED_RANK,
            0.0,
            1.0,
            False,
            degenerate=True,
            estimate=float(np.median(shap)),
        )


def two_group_test(
    first: np.ndarray, second: np.ndarray, labels: Tuple[str, str], alpha: float
) -> TestResult:
    if _all_normal([first, second], alpha):
        result = significance.t_test(TMode.TWO_SAMPLE, first, second)
    else:
        result = significance.rank_sum_test(first, second)
    return dataclasses.replace(result, group_labels=labels)


def compare_categories(
    values: Sequence[float], shap: Sequence[float], kind: Kind, alpha: float
) -> CategoryComparison:
    assert kind.is_categorical, kind
    values_arr = np.asarray(values, dtype=float)
    shap_arr = np.asarray(shap, dtype=float)

    per_category = []
    usable = []
    for value in np.unique(values_arr):
        group = shap_arr[values_arr == value]
        label = format_category(value)
        zero = zero_mean_test(group, alpha) if len(group) >= MIN_CATEGORY_SIZE else None
        per_category.append(
            CategoryStat(
                value=float(value),
                label=label,
                n=len(group),
                mean_shap=float(group.mean()),
                zero_test=zero,
            )
        )
        if zero is not None:
            usable.append((label, group))

    if len(usable) < 2:
        return CategoryComparison(
            kind=kind,
            per_category=per_category,
            between=None,
            posthoc=None,
            untestable=(
                f"only {len(usable)} categor{'y' if len(usable) == 1 else 'ies'} "
                f"with at least {MIN_CATEGORY_SIZE} samples"
            ),
        )

    labels = [label for label, _ in usable]
    groups = [group for _, group in usable]
    posthoc: Optional[List[TestResult]] = None
    if kind is Kind.BINARY:
        # higher category first, so the estimate reads "high minus low"
        between = two_group_test(groups[1], groups[0], (labels[1], labels[0]), alpha)
    else:
        if _all_normal(groups, alpha):
            between = significance.anova_oneway(groups)
        else:
            between = significance.kruskal_wallis(groups)
        if between.significant(alpha) and len(groups) >= 3:
            posthoc = significance.tukey_hsd(groups, labels, alpha)
    return CategoryComparison(
        kind=kind, per_category=per_category, between=between, posthoc=posthoc
    )


@dataclasses.dataclass(frozen=True)
class CategoricalFinding:
    feature: int
    feature_name: str
    kind: FeatureKind
    comparison: CategoryComparison

    @property
    def per_category(self) -> List[CategoryStat]:
        return self.comparison.per_category

    @property
    def between(self) -> Optional[TestResult]:
        return self.comparison.between

    @property
    def posthoc(self) -> Optional[List[TestResult]]:
        return self.comparison.posthoc


@dataclasses.dataclass(frozen=True)
class ContinuousFinding:
    feature: int
    feature_name: str
    kind: FeatureKind
    selection: FitSelection


@dataclasses.dataclass(frozen=True)
class DegenerateFinding:
    feature: int
    feature_name: str
    kind: FeatureKind
    reason: str


Finding = Union[CategoricalFinding, ContinuousFinding, DegenerateFinding]


def analyze_categorical_feature(
    bundle: DatasetBundle, feature: int, kind: FeatureKind, config: Config
) -> CategoricalFinding:
    comparison = compare_categories(
        bundle.column(feature),
        bundle.shap_column(feature),
        kind.kind,
        config.p_univariate,
    )
    if comparison.between is not None:
        logger.debug(
            "%s: %s p=%g",
            bundle.feature_names[feature],
            comparison.between.test_name.value,
            comparison.between.p_value,
        )
    return CategoricalFinding(
        feature=feature,
        feature_name=bundle.feature_names[feature],
        kind=kind,
        comparison=comparison,
    )


def analyze_continuous_feature(
    bundle: DatasetBundle,
    feature: int,
    config: Config,
    kind: Optional[FeatureKind] = None,
) -> ContinuousFinding:
    selection = curves.select_best_fit(
        bundle.column(feature), bundle.shap_column(feature), config.p_univariate
    )
    if selection.best is not None:
        logger.debug(
            "%s: %s fit selected",
            bundle.feature_names[feature],
            selection.best.family.value,
        )
    if kind is None:
        kind = FeatureKind(Kind.CONTINUOUS, len(np.unique(bundle.column(feature))))
    return ContinuousFinding(
        feature=feature,
        feature_name=bundle.feature_names[feature],
        kind=kind,
        selection=selection,
    )


def analyze_feature(
    bundle: DatasetBundle, feature: int, kind: FeatureKind, config: Config
) -> Finding:
    match kind.kind:
        case Kind.BINARY | Kind.DISCRETE:
            return analyze_categorical_feature(bundle, feature, kind, config)
        case Kind.CONTINUOUS:
            return analyze_continuous_feature(bundle, feature, config, kind)
        case Kind.CONSTANT:
            return DegenerateFinding(
                feature=feature,
                feature_name=bundle.feature_names[feature],
                kind=kind,
                reason="constant feature",
            )
    raise LookupError(kind.kind)


def is_significant(finding: Finding, alpha: float) -> bool:
    match finding:
        case CategoricalFinding():
            between = finding.between
            return (between is not None and between.significant(alpha)) or any(
                c.zero_test is not None and c.zero_test.significant(alpha)
                for c in finding.per_category
            )
        case ContinuousFinding():
            return not finding.selection.none_significant
        case DegenerateFinding():
            return False
    raise LookupError(finding)
