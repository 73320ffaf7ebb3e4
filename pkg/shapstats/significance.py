from __future__ import annotations

import dataclasses
import enum
import itertools
import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from . import distributions
from .errors import DegenerateSample

"""
Two-sided hypothesis tests with exact small-sample behaviour.

Degenerate inputs (zero variance) never raise: a zero effect gives p=1, a
nonzero effect gives p=0, and the result is flagged `degenerate`.
"""

EXACT_SIGNED_RANK_MAX_N = 25
EXACT_RANK_SUM_MAX_N = 12


class TestName(enum.Enum):
    SHAPIRO_WILK = "shapiro_wilk"
    T_ONE_SAMPLE = "t_one_sample"
    T_PAIRED = "t_paired"
    T_TWO_SAMPLE = "t_two_sample"
    SIGNED_RANK = "signed_rank"
    RANK_SUM = "rank_sum"
    ANOVA = "anova"
    KRUSKAL_WALLIS = "kruskal_wallis"
    TUKEY_HSD_PAIR = "tukey_hsd_pair"
    NESTED_F = "nested_f"

    def display(self) -> str:
        return _DISPLAY[self]


_DISPLAY = {
    TestName.SHAPIRO_WILK: "Shapiro-Wilk",
    TestName.T_ONE_SAMPLE: "one-sample t-test",
    TestName.T_PAIRED: "paired t-test",
    TestName.T_TWO_SAMPLE: "two-sample t-test",
    TestName.SIGNED_RANK: "Wilcoxon signed-rank test",
    TestName.RANK_SUM: "Wilcoxon rank-sum (Mann-Whitney U) test",
    TestName.ANOVA: "one-way ANOVA",
    TestName.KRUSKAL_WALLIS: "Kruskal-Wallis test",
    TestName.TUKEY_HSD_PAIR: "Tukey HSD",
    TestName.NESTED_F: "extra-sum-of-squares F-test",
}


class TMode(enum.Enum):
    ONE_SAMPLE = "one_sample"
    PAIRED = "paired"
    TWO_SAMPLE = "two_sample"


@dataclasses.dataclass(frozen=True)
class TestResult:
    test_name: TestName
    statistic: float
    p_value: float
    parametric_route: bool
    df: Optional[float] = None
    # denominator degrees of freedom of F-based tests
    df2: Optional[float] = None
    group_labels: Optional[Tuple[str, str]] = None
    degenerate: bool = False
    estimate: Optional[float] = None
    interval: Optional[Tuple[float, float]] = None

    __test__ = False  # not a pytest class

    def __post_init__(self) -> None:
        assert 0.0 <= self.p_value <= 1.0, self
        assert math.isfinite(self.statistic) or self.degenerate, self

    def significant(self, alpha: float) -> bool:
        return self.p_value < alpha


def _array(values: Sequence[float], name: str, min_n: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if len(arr) < min_n:
        raise DegenerateSample(f"{name} needs at least {min_n} values, got {len(arr)}")
    return arr


def _degenerate_t(
    name: TestName, effect: float, df: float, estimate: float
) -> TestResult:
    if effect == 0:
        return TestResult(
            name, 0.0, 1.0, True, df=df, degenerate=True, estimate=estimate
        )
    return TestResult(
        name,
        math.copysign(math.inf, effect),
        0.0,
        True,
        df=df,
        degenerate=True,
        estimate=estimate,
    )


def _one_sample(name: TestName, x: np.ndarray, mu: float) -> TestResult:
    n = len(x)
    df = float(n - 1)
    effect = float(x.mean() - mu)
    se = float(x.std(ddof=1)) / math.sqrt(n)
    if se == 0.0:
        return _degenerate_t(name, effect, df, effect)
    t = effect / se
    return TestResult(
        name, t, distributions.t_two_sided_p(t, df), True, df=df, estimate=effect
    )


def _two_sample(x: np.ndarray, y: np.ndarray, equal_var: bool) -> TestResult:
    n1, n2 = len(x), len(y)
    effect = float(x.mean() - y.mean())
    v1, v2 = float(x.var(ddof=1)), float(y.var(ddof=1))
    if equal_var:
        df = float(n1 + n2 - 2)
        pooled = ((n1 - 1) * v1 + (n2 - 1) * v2) / df
        se = math.sqrt(pooled * (1.0 / n1 + 1.0 / n2))
    else:
        q1, q2 = v1 / n1, v2 / n2
        se = math.sqrt(q1 + q2)
        df = (
            (q1 + q2) ** 2 / (q1**2 / (n1 - 1) + q2**2 / (n2 - 1))
            if se > 0
            else float(n1 + n2 - 2)
        )
    if se == 0.0:
        return _degenerate_t(TestName.T_TWO_SAMPLE, effect, df, effect)
    t = effect / se
    return TestResult(
        TestName.T_TWO_SAMPLE,
        t,
        distributions.t_two_sided_p(t, df),
        True,
        df=df,
        estimate=effect,
    )


def t_test(
    mode: TMode,
    x: Sequence[float],
    y_or_mu: Union[Sequence[float], float],
    equal_var: bool = True,
) -> TestResult:
    """Student's t-test; two_sample is the pooled form unless equal_var=False."""
    xa = _array(x, "t-test", 2)
    match mode:
        case TMode.ONE_SAMPLE:
            assert isinstance(y_or_mu, (int, float))
            return _one_sample(TestName.T_ONE_SAMPLE, xa, float(y_or_mu))
        case TMode.PAIRED:
            assert not isinstance(y_or_mu, (int, float))
            ya = _array(y_or_mu, "paired t-test", 2)
            if len(xa) != len(ya):
                raise DegenerateSample(
                    f"paired t-test needs equal lengths, got {len(xa)} and {len(ya)}"
                )
            return _one_sample(TestName.T_PAIRED, xa - ya, 0.0)
        case TMode.TWO_SAMPLE:
            assert not isinstance(y_or_mu, (int, float))
            return _two_sample(xa, _array(y_or_mu, "two-sample t-test", 2), equal_var)
    raise LookupError(mode)


def _tie_term(values: np.ndarray) -> float:
    _, counts = np.unique(values, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def _two_sided_from_tails(lower: float, upper: float) -> float:
    return min(1.0, 2.0 * min(lower, upper))


def signed_rank_distribution(doubled_ranks: Sequence[int]) -> np.ndarray:
    """counts[s] = number of sign patterns whose positive doubled-rank sum is s"""
    counts = np.zeros(int(sum(doubled_ranks)) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: len(counts) - r]
        counts = counts + shifted
    return counts


def signed_rank_test(x: Sequence[float], mu: float = 0.0) -> TestResult:
    """Wilcoxon signed-rank; zero differences are dropped before ranking.

    The statistic is W+, the rank sum of positive differences. At least 3
    nonzero differences are required unless there are none at all.
    """
    d = np.asarray(x, dtype=float).ravel() - mu
    d = d[d != 0.0]
    n = len(d)
    if n == 0:
        return TestResult(
            TestName.SIGNED_RANK, 0.0, 1.0, False, degenerate=True, estimate=0.0
        )
    if n < 3:
        raise DegenerateSample(
            f"signed-rank test needs at least 3 nonzero differences, got {n}"
        )
    ranks = stats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    estimate = float(np.median(d))

    if n <= EXACT_SIGNED_RANK_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = signed_rank_distribution(doubled)
        total = float(2**n)
        s = int(round(2 * w_plus))
        lower = float(counts[: s + 1].sum()) / total
        upper = float(counts[s:].sum()) / total
        p = _two_sided_from_tails(lower, upper)
    else:
        mean = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(np.abs(d)) / 48.0
        if var <= 0:
            p = 1.0
        else:
            z = max(0.0, abs(w_plus - mean) - 0.5) / math.sqrt(var)
            p = min(1.0, 2.0 * distributions.normal_sf(z))
    return TestResult(TestName.SIGNED_RANK, w_plus, p, False, estimate=estimate)


def _exact_rank_sum_tails(n1: int, n2: int, u: float) -> Tuple[float, float]:
    offset = n1 * (n1 + 1) // 2
    lower = upper = 0
    total = 0
    for combo in itertools.combinations(range(1, n1 + n2 + 1), n1):
        value = sum(combo) - offset
        total += 1
        if value <= u:
            lower += 1
        if value >= u:
            upper += 1
    return lower / total, upper / total


def rank_sum_test(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Mann-Whitney U; the statistic is U of the first group."""
    xa = _array(x, "rank-sum test", 2)
    ya = _array(y, "rank-sum test", 2)
    n1, n2 = len(xa), len(ya)
    pooled = np.concatenate([xa, ya])
    ranks = stats.rankdata(pooled)
    u = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2.0
    estimate = float(np.median(xa) - np.median(ya))
    ties = _tie_term(pooled)

    if n1 + n2 <= EXACT_RANK_SUM_MAX_N and ties == 0:
        lower, upper = _exact_rank_sum_tails(n1, n2, u)
        return TestResult(
            TestName.RANK_SUM,
            u,
            _two_sided_from_tails(lower, upper),
            False,
            estimate=estimate,
        )

    n = n1 + n2
    mean = n1 * n2 / 2.0
    var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)))
    if var <= 0:
        return TestResult(
            TestName.RANK_SUM, u, 1.0, False, degenerate=True, estimate=estimate
        )
    z = max(0.0, abs(u - mean) - 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * distributions.normal_sf(z))
    return TestResult(TestName.RANK_SUM, u, p, False, estimate=estimate)


def _groups(
    groups: Sequence[Sequence[float]], min_n: int, name: str
) -> List[np.ndarray]:
    arrays = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(arrays) < 2:
        raise DegenerateSample(f"{name} needs at least 2 groups, got {len(arrays)}")
    for g in arrays:
        if len(g) < min_n:
            raise DegenerateSample(
                f"{name} needs at least {min_n} values per group, got {len(g)}"
            )
    return arrays


def _sums_of_squares(arrays: List[np.ndarray]) -> Tuple[float, float]:
    grand = float(np.concatenate(arrays).mean())
    ssb = float(sum(len(g) * (g.mean() - grand) ** 2 for g in arrays))
    ssw = float(sum(np.sum((g - g.mean()) ** 2) for g in arrays))
    return ssb, ssw


def anova_oneway(groups: Sequence[Sequence[float]]) -> TestResult:
    arrays = _groups(groups, 2, "one-way ANOVA")
    k = len(arrays)
    n = sum(len(g) for g in arrays)
    dfn, dfd = float(k - 1), float(n - k)
    ssb, ssw = _sums_of_squares(arrays)
    if ssw == 0.0:
        if ssb == 0.0:
            return TestResult(
                TestName.ANOVA, 0.0, 1.0, True, df=dfn, df2=dfd, degenerate=True
            )
        return TestResult(
            TestName.ANOVA, math.inf, 0.0, True, df=dfn, df2=dfd, degenerate=True
        )
    f = (ssb / dfn) / (ssw / dfd)
    return TestResult(
        TestName.ANOVA, f, distributions.f_sf(f, dfn, dfd), True, df=dfn, df2=dfd
    )


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    arrays = _groups(groups, 1, "Kruskal-Wallis")
    pooled = np.concatenate(arrays)
    n = len(pooled)
    if n < 3:
        raise DegenerateSample(f"Kruskal-Wallis needs at least 3 values, got {n}")
    df = float(len(arrays) - 1)
    correction = 1.0 - _tie_term(pooled) / float(n**3 - n)
    if correction <= 0:
        return TestResult(
            TestName.KRUSKAL_WALLIS, 0.0, 1.0, False, df=df, degenerate=True
        )
    ranks = stats.rankdata(pooled)
    mean_rank = (n + 1) / 2.0
    h = 0.0
    start = 0
    for g in arrays:
        r = ranks[start : start + len(g)]
        h += len(g) * (float(r.mean()) - mean_rank) ** 2
        start += len(g)
    h = 12.0 / (n * (n + 1)) * h / correction
    return TestResult(
        TestName.KRUSKAL_WALLIS, h, distributions.chi2_sf(h, df), False, df=df
    )


def tukey_hsd(
    groups: Sequence[Sequence[float]],
    labels: Sequence[str],
    alpha: float = 0.05,
) -> List[TestResult]:
    """Tukey-Kramer all-pairs comparison, one result per (i, j), i < j.

    `estimate` is mean_i - mean_j and `interval` its simultaneous
    (1 - alpha) confidence interval.
    """
    arrays = _groups(groups, 2, "Tukey HSD")
    if len(labels) != len(arrays):
        raise DegenerateSample(
            f"Tukey HSD got {len(labels)} labels for {len(arrays)} groups"
        )
    k = len(arrays)
    n = sum(len(g) for g in arrays)
    df = float(n - k)
    _, ssw = _sums_of_squares(arrays)
    mse = ssw / df
    q_crit = distributions.studentized_range_ppf(1.0 - alpha, k, df) if mse > 0 else 0.0

    results = []
    for i, j in itertools.combinations(range(k), 2):
        diff = float(arrays[i].mean() - arrays[j].mean())
        se = math.sqrt(mse / 2.0 * (1.0 / len(arrays[i]) + 1.0 / len(arrays[j])))
        pair = (str(labels[i]), str(labels[j]))
        if se == 0.0:
            results.append(
                TestResult(
                    TestName.TUKEY_HSD_PAIR,
                    0.0 if diff == 0 else math.inf,
                    1.0 if diff == 0 else 0.0,
                    True,
                    df=df,
                    group_labels=pair,
                    degenerate=True,
                    estimate=diff,
                    interval=(diff, diff),
                )
            )
            continue
        q = abs(diff) / se
        results.append(
            TestResult(
                TestName.TUKEY_HSD_PAIR,
                q,
                distributions.studentized_range_sf(q, k, df),
                True,
                df=df,
                group_labels=pair,
                estimate=diff,
                interval=(diff - q_crit * se, diff + q_crit * se),
            )
        )
    return results


def nested_f_test(
    sse_reduced: float, sse_full: float, df_extra: float, df_residual: float
) -> TestResult:
    """F-test of a model against a nested one with `df_extra` fewer
    parameters, both fitted to the same observations.

    `df_residual` is the full model's residual degrees of freedom.
    """
    if df_extra <= 0 or df_residual <= 0:
        raise DegenerateSample(
            f"nested F-test needs positive degrees of freedom, "
            f"got {df_extra} and {df_residual}"
        )
    gain = max(sse_reduced - sse_full, 0.0)
    if sse_full <= 0.0:
        return TestResult(
            TestName.NESTED_F,
            0.0 if gain == 0.0 else math.inf,
            1.0 if gain == 0.0 else 0.0,
            True,
            df=df_extra,
            df2=df_residual,
            degenerate=True,
        )
    f = (gain / df_extra) / (sse_full / df_residual)
    return TestResult(
        TestName.NESTED_F,
        f,
        distributions.f_sf(f, df_extra, df_residual),
        True,
        df=df_extra,
        df2=df_residual,
    )
