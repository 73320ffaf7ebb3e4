from __future__ import annotations

import dataclasses
import enum
import itertools
import logging
import math
from typing import FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from shapstats import curves, significance
from shapstats.curves import FitResult
from shapstats.significance import TestName, TestResult

from .config import Config
from .errors import InteractionSkipped
from .parse import DatasetBundle
from .selection import FeatureKind, Kind
from .univariate import (
    CategoryComparison,
    ContinuousFinding,
    compare_categories,
    format_category,
)

"""
Interaction analysis: for a target feature, find the feature that most
modulates its SHAP values, split the samples by that partner, and repeat
the univariate analysis inside each partner group.
"""

logger = logging.getLogger(__name__)

MAX_ROWS = 10000
MAX_WINDOW = 50
BELOW = "below"
ABOVE = "above"


@dataclasses.dataclass(frozen=True)
class InteractionAssignment:
    target: int
    partner: int
    partner_scores: np.ndarray
    ranked_partners: Tuple[int, ...]

    def top(self, k: int) -> List[int]:
        return list(self.ranked_partners[:k])


def _window(n: int) -> int:
    return max(min(int(n / 10.0), MAX_WINDOW), 1)


def _window_score(shap_sorted: np.ndarray, other_sorted: np.ndarray, inc: int) -> float:
    if np.sum(np.abs(other_sorted)) < 1e-8:
        return 0.0
    total = 0.0
    for start in range(0, len(shap_sorted), inc):
        a = shap_sorted[start : start + inc]
        b = other_sorted[start : start + inc]
        if np.std(a) > 0 and np.std(b) > 0:
            total += abs(float(np.corrcoef(a, b)[0, 1]))
    return total


def approximate_interactions(
    target: int, bundle: DatasetBundle, rng_seed: int = 0
) -> InteractionAssignment:
    """Rank candidate partners of `target` by summed |Pearson r| between the
    target's SHAP values and the candidate's values over consecutive windows
    of the samples sorted by the target's value."""
    if bundle.n_features < 2:
        raise InteractionSkipped("interaction analysis needs at least 2 features")
    rows = np.arange(bundle.n_samples)
    if bundle.n_samples > MAX_ROWS:
        rng = np.random.default_rng(rng_seed)
        rows = np.sort(rng.permutation(bundle.n_samples)[:MAX_ROWS])

    x = bundle.features[rows, target]
    order = np.argsort(x, kind="stable")
    shap_sorted = bundle.shap_values[rows, target][order]
    inc = _window(len(rows))

    scores = np.zeros(bundle.n_features)
    for candidate in range(bundle.n_features):
        if candidate == target:
            continue
        other = bundle.features[rows, candidate][order]
        scores[candidate] = _window_score(shap_sorted, other, inc)

    candidates = [i for i in np.argsort(-scores, kind="stable") if i != target]
    ranked = tuple(int(i) for i in candidates)
    return InteractionAssignment(
        target=target,
        partner=ranked[0],
        partner_scores=scores,
        ranked_partners=ranked,
    )


def binarize_by_mean(column: Sequence[float]) -> np.ndarray:
    values = np.asarray(column, dtype=float)
    if np.ptp(values) == 0:
        raise InteractionSkipped("cannot split a constant partner at its mean")
    return np.where(values > values.mean(), ABOVE, BELOW)


def partner_groups(
    column: Sequence[float], kind: FeatureKind
) -> Tuple[np.ndarray, List[str]]:
    """Per-sample group label and the group order: native categories for a
    categorical partner, below/above the mean for a continuous one."""
    values = np.asarray(column, dtype=float)
    match kind.kind:
        case Kind.BINARY | Kind.DISCRETE:
            labels = np.array([format_category(v) for v in values])
            return labels, [format_category(v) for v in np.unique(values)]
        case Kind.CONTINUOUS:
            labels = binarize_by_mean(values)
            return labels, [g for g in (BELOW, ABOVE) if np.any(labels == g)]
        case Kind.CONSTANT:
            raise InteractionSkipped("partner feature is constant")
    raise LookupError(kind.kind)


class InteractionCase(enum.Enum):
    CAT_CAT = "cat_cat"
    CAT_CONT = "cat_cont"
    CONT_CAT = "cont_cat"
    CONT_CONT = "cont_cont"

    @classmethod
    def of(cls, target: Kind, partner: Kind) -> "InteractionCase":
        prefix = "cat" if target.is_categorical else "cont"
        suffix = "cat" if partner.is_categorical else "cont"
        return cls(f"{prefix}_{suffix}")

    @property
    def categorical_target(self) -> bool:
        return self in (InteractionCase.CAT_CAT, InteractionCase.CAT_CONT)

    @property
    def continuous_partner(self) -> bool:
        return self in (InteractionCase.CAT_CONT, InteractionCase.CONT_CONT)


@dataclasses.dataclass(frozen=True)
class InteractionGroup:
    label: str
    n: int
    comparison: Optional[CategoryComparison] = None
    fit: Optional[FitResult] = None
    skipped: str = ""


@dataclasses.dataclass(frozen=True)
class MarginTest:
    groups: Tuple[str, str]
    result: TestResult


@dataclasses.dataclass(frozen=True)
class InteractionFinding:
    target: int
    target_name: str
    partner: int
    partner_name: str
    case: Optional[InteractionCase]
    partition: Tuple[str, ...]
    groups: List[InteractionGroup]
    margin_tests: List[MarginTest]
    significant: bool
    partner_score: float = 0.0
    skipped: str = ""

    @property
    def margin_test(self) -> Optional[TestResult]:
        """The strongest margin comparison, if any was run."""
        if not self.margin_tests:
            return None
        return min(self.margin_tests, key=lambda m: m.result.p_value).result


def skipped_finding(
    bundle: DatasetBundle, target: int, partner: int, reason: str, score: float = 0.0
) -> InteractionFinding:
    logger.info(
        "interaction %s x %s skipped: %s",
        bundle.feature_names[target],
        bundle.feature_names[partner],
        reason,
    )
    return InteractionFinding(
        target=target,
        target_name=bundle.feature_names[target],
        partner=partner,
        partner_name=bundle.feature_names[partner],
        case=None,
        partition=(),
        groups=[],
        margin_tests=[],
        significant=False,
        partner_score=score,
        skipped=reason,
    )


# (category pair, first has higher SHAP)
PairCall = Tuple[Tuple[str, str], bool]


def _signature(
    comparison: CategoryComparison, alpha: float
) -> Tuple[bool, FrozenSet[PairCall]]:
    """The between-category verdict and every significant (pair, higher) call."""
    between = comparison.between
    assert between is not None
    if not between.significant(alpha):
        return False, frozenset()
    if comparison.posthoc is not None:
        directional = [p for p in comparison.posthoc if p.significant(alpha)]
    else:
        directional = [between] if between.group_labels is not None else []
    calls: Set[PairCall] = set()
    for test in directional:
        assert test.group_labels is not None and test.estimate is not None
        calls.add((test.group_labels, test.estimate > 0))
    return True, frozenset(calls)


def groups_disagree(comparisons: Sequence[CategoryComparison], alpha: float) -> bool:
    """Whether the target's category effect changes with the partner group.

    Each tested group is summarised by its between-category verdict and the
    category pairs it finds significantly different, with their direction.
    The effect is modulated when two tested groups summarise differently; an
    effect that is the same everywhere is a main effect, not an interaction.
    """
    signatures = {_signature(c, alpha) for c in comparisons if c.between is not None}
    return len(signatures) > 1


def analyze_interaction_categorical_target(
    bundle: DatasetBundle,
    target: int,
    partner: int,
    kinds: Sequence[FeatureKind],
    config: Config,
) -> InteractionFinding:
    target_kind = kinds[target].kind
    assert target_kind.is_categorical, target_kind
    labels, order = partner_groups(bundle.column(partner), kinds[partner])
    values = bundle.column(target)
    shap = bundle.shap_column(target)

    groups = []
    for label in order:
        mask = labels == label
        comparison = compare_categories(
            values[mask], shap[mask], target_kind, config.p_interaction
        )
        skipped = comparison.untestable
        groups.append(
            InteractionGroup(
                label=label, n=int(mask.sum()), comparison=comparison, skipped=skipped
            )
        )
    return InteractionFinding(
        target=target,
        target_name=bundle.feature_names[target],
        partner=partner,
        partner_name=bundle.feature_names[partner],
        case=InteractionCase.of(target_kind, kinds[partner].kind),
        partition=tuple(str(v) for v in labels),
        groups=groups,
        margin_tests=[],
        significant=groups_disagree(
            [g.comparison for g in groups if g.comparison is not None],
            config.p_interaction,
        ),
    )


def margin_test(
    family: curves.FitFamily,
    first: Tuple[np.ndarray, np.ndarray],
    second: Tuple[np.ndarray, np.ndarray],
) -> TestResult:
    """Do two partner groups need separate curves?

    Each group is an (x, shap) pair. The separate fits of `family` are
    compared with one fit pooled over both groups by the extra-sum-of-squares
    F-test on the raw SHAP values, so every sample counts once.
    """
    fits = [curves.try_fit_family(family, x, y) for x, y in (first, second)]
    pooled = curves.try_fit_family(
        family,
        np.concatenate([first[0], second[0]]),
        np.concatenate([first[1], second[1]]),
    )
    k = len(pooled.coefficients)
    n = pooled.n_points
    sse_separate = sum(fit.rmse**2 * fit.n_points for fit in fits)
    sse_pooled = pooled.rmse**2 * n
    if not math.isfinite(sse_pooled) or not math.isfinite(sse_separate):
        logger.debug("margin test without a usable %s fit", family.value)
        return TestResult(
            TestName.NESTED_F, 0.0, 1.0, True, df=float(k), degenerate=True
        )
    return significance.nested_f_test(
        sse_pooled, sse_separate, float(k), float(n - 2 * k)
    )


def analyze_interaction_continuous_target(
    bundle: DatasetBundle,
    target: int,
    partner: int,
    kinds: Sequence[FeatureKind],
    univariate_finding: ContinuousFinding,
    config: Config,
) -> InteractionFinding:
    best = univariate_finding.selection.best
    if best is None:
        return skipped_finding(
            bundle, target, partner, "no significant univariate pattern to refit"
        )
    labels, order = partner_groups(bundle.column(partner), kinds[partner])
    x = bundle.column(target)
    shap = bundle.shap_column(target)
    alpha = config.p_interaction

    groups = []
    kept: List[Tuple[str, np.ndarray]] = []
    for label in order:
        mask = labels == label
        fit = curves.try_fit_family(best.family, x[mask], shap[mask])
        skipped = "" if fit.converged else fit.reason or "fit did not converge"
        groups.append(
            InteractionGroup(label=label, n=int(mask.sum()), fit=fit, skipped=skipped)
        )
        if fit.significant(alpha):
            kept.append((label, mask))

    margins = []
    for (label_a, mask_a), (label_b, mask_b) in itertools.combinations(kept, 2):
        result = margin_test(
            best.family, (x[mask_a], shap[mask_a]), (x[mask_b], shap[mask_b])
        )
        margins.append(
            MarginTest(
                groups=(label_a, label_b),
                result=dataclasses.replace(result, group_labels=(label_a, label_b)),
            )
        )
    logger.debug(
        "%s x %s: %d groups with significant %s fits",
        bundle.feature_names[target],
        bundle.feature_names[partner],
        len(kept),
        best.family.value,
    )
    return InteractionFinding(
        target=target,
        target_name=bundle.feature_names[target],
        partner=partner,
        partner_name=bundle.feature_names[partner],
        case=InteractionCase.of(Kind.CONTINUOUS, kinds[partner].kind),
        partition=tuple(str(v) for v in labels),
        groups=groups,
        margin_tests=margins,
        significant=any(m.result.significant(alpha) for m in margins),
    )
