from __future__ import annotations

import dataclasses
import enum
import logging
import multiprocessing.pool
from typing import List, Optional, Sequence, Tuple

import numpy as np

from shapstats import shapiro, significance
from shapstats.errors import DegenerateSample
from shapstats.significance import TestName, TestResult, TMode

from .config import Config
from .parse import DatasetBundle

"""
How many of the top-ranked features to analyze, and what kind of data each
feature holds.

Features are ranked by mean |SHAP|. Every adjacent pair of ranked features
is tested for a difference in |SHAP|; a significant difference is a cut.
The number of important features is the cut in [candidate_num_min,
candidate_num_max] with the biggest drop in mean |SHAP| to the next cut.
"""

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class FeatureRanking:
    order: Tuple[int, ...]
    mean_abs_shap: np.ndarray

    def ranked_means(self) -> np.ndarray:
        return self.mean_abs_shap[list(self.order)]


class CutRule(enum.Enum):
    MANUAL = "manual"
    CUT = "cut"
    FALLBACK_BELOW = "fallback_below"
    FALLBACK_DEFAULT = "fallback_default"

    @property
    def is_fallback(self) -> bool:
        return self in (CutRule.FALLBACK_BELOW, CutRule.FALLBACK_DEFAULT)


@dataclasses.dataclass(frozen=True)
class CutAnalysis:
    """adjacent_p[i] compares ranks i and i+1 (0-based); a cut there keeps
    i+1 features, so cut_positions hold feature counts."""

    adjacent_p: List[float]
    adjacent_tests: List[TestResult]
    cut_positions: List[int]
    gap_scores: List[float]
    chosen_k: int
    rule: CutRule


class Kind(enum.Enum):
    CONSTANT = "constant"
    BINARY = "binary"
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"

    @property
    def is_categorical(self) -> bool:
        return self in (Kind.BINARY, Kind.DISCRETE)


@dataclasses.dataclass(frozen=True)
class FeatureKind:
    kind: Kind
    n_unique: int


def rank_features(bundle: DatasetBundle) -> FeatureRanking:
    mean_abs = np.abs(bundle.shap_values).mean(axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    return FeatureRanking(
        order=tuple(int(i) for i in order), mean_abs_shap=mean_abs
    )


def compare_adjacent(
    upper: np.ndarray, lower: np.ndarray, alpha: float, strict: bool
) -> TestResult:
    """|SHAP| of two adjacently ranked features: paired t-test when both pass
    the normality gate, otherwise the rank-sum test (signed-rank on the
    differences when `strict`)."""
    both_normal = (
        shapiro.normality_gate(upper, alpha).is_normal
        and shapiro.normality_gate(lower, alpha).is_normal
    )
    if both_normal:
        return significance.t_test(TMode.PAIRED, upper, lower)
    if not strict:
        return significance.rank_sum_test(upper, lower)
    try:
        return significance.signed_rank_test(upper - lower)
    except DegenerateSample as e:
        logger.debug("adjacent signed-rank test: %s", e)
        return TestResult(
            TestName.SIGNED_RANK,
            0.0,
            1.0,
            False,
            degenerate=True,
            estimate=float(np.median(upper - lower)),
        )


class _AdjacentWorker:
    def __init__(self, bundle: DatasetBundle, ranking: FeatureRanking, config: Config):
        self.abs_shap = np.abs(bundle.shap_values)
        self.ranking = ranking
        self.config = config

    def __call__(self, rank: int) -> TestResult:
        upper = self.abs_shap[:, self.ranking.order[rank]]
        lower = self.abs_shap[:, self.ranking.order[rank + 1]]
        try:
            return compare_adjacent(
                upper,
                lower,
                self.config.p_feature_selection,
                self.config.strict_paired_nonparametric,
            )
        except Exception:
            logger.exception("adjacent test failed at rank %d", rank + 1)
            raise


def gap_scores(cut_positions: Sequence[int], ranking: FeatureRanking) -> List[float]:
    """Drop in mean |SHAP| from the last feature kept at each cut to the last
    feature kept at the next cut (the overall minimum after the final cut)."""
    means = ranking.ranked_means()
    floor = float(means.min()) if len(means) else 0.0
    scores = []
    for j, k in enumerate(cut_positions):
        if j + 1 < len(cut_positions):
            nxt = float(means[cut_positions[j + 1] - 1])
        else:
            nxt = floor
        scores.append(float(means[k - 1]) - nxt)
    return scores


def _choose(
    cut_positions: Sequence[int],
    gaps: Sequence[float],
    n_features: int,
    config: Config,
) -> Tuple[int, CutRule]:
    if config.manual_num is not None:
        return min(config.manual_num, n_features), CutRule.MANUAL
    in_range = [
        (gap, k)
        for k, gap in zip(cut_positions, gaps)
        if config.candidate_num_min <= k <= config.candidate_num_max
    ]
    if in_range:
        best_gap = max(gap for gap, _ in in_range)
        # smallest k among equal gaps
        return min(k for gap, k in in_range if gap == best_gap), CutRule.CUT
    below = [k for k in cut_positions if k < config.candidate_num_min]
    if below:
        return max(below), CutRule.FALLBACK_BELOW
    return min(config.candidate_num_max, n_features), CutRule.FALLBACK_DEFAULT


def adjacent_significance_cuts(
    bundle: DatasetBundle,
    ranking: FeatureRanking,
    config: Config,
    threads: int = 1,
) -> CutAnalysis:
    n = bundle.n_features
    ranks = list(range(n - 1))
    worker = _AdjacentWorker(bundle, ranking, config)
    if threads > 1 and len(ranks) > 1:
        with multiprocessing.pool.ThreadPool(threads) as pool:
            tests = pool.map(worker, ranks)
    else:
        tests = [worker(rank) for rank in ranks]

    adjacent_p = [t.p_value for t in tests]
    cuts = [
        rank + 1
        for rank, p in enumerate(adjacent_p)
        if p < config.p_feature_selection
    ]
    gaps = gap_scores(cuts, ranking)
    chosen_k, rule = _choose(cuts, gaps, n, config)
    logger.debug("cut positions %s, gaps %s", cuts, gaps)
    if rule.is_fallback:
        logger.warning(
            "no cut in [%d, %d], falling back to k=%d (%s)",
            config.candidate_num_min,
            config.candidate_num_max,
            chosen_k,
            rule.value,
        )
    return CutAnalysis(
        adjacent_p=adjacent_p,
        adjacent_tests=tests,
        cut_positions=cuts,
        gap_scores=gaps,
        chosen_k=chosen_k,
        rule=rule,
    )


def choose_num_important(
    cuts: CutAnalysis, ranking: FeatureRanking, config: Config
) -> int:
    k, _ = _choose(
        cuts.cut_positions,
        gap_scores(cuts.cut_positions, ranking),
        len(ranking.order),
        config,
    )
    return k


def classify_feature_kind(column: Sequence[float], cont_bound: int) -> FeatureKind:
    values = np.asarray(column, dtype=float)
    assert len(values), "empty column"
    n_unique = len(np.unique(values))
    if n_unique == 1:
        kind = Kind.CONSTANT
    elif n_unique == 2:
        kind = Kind.BINARY
    elif n_unique > cont_bound:
        kind = Kind.CONTINUOUS
    else:
        kind = Kind.DISCRETE
    return FeatureKind(kind=kind, n_unique=n_unique)


def important_features(ranking: FeatureRanking, k: int) -> List[int]:
    return list(ranking.order[:k])


def describe_cuts(cuts: CutAnalysis, config: Config) -> Optional[str]:
    """Caveat text for a k that was not picked from an in-range cut."""
    match cuts.rule:
        case CutRule.FALLBACK_BELOW:
            return (
                f"No significant cut fell within [{config.candidate_num_min}, "
                f"{config.candidate_num_max}]; the largest cut below the range "
                f"({cuts.chosen_k}) was used."
            )
        case CutRule.FALLBACK_DEFAULT:
            return (
                f"No significant cut fell within or below [{config.candidate_num_min}, "
                f"{config.candidate_num_max}]; {cuts.chosen_k} features were kept."
            )
        case CutRule.MANUAL:
            return None
        case CutRule.CUT:
            return None
    raise LookupError(cuts.rule)
