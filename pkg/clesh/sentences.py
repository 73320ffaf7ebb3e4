from __future__ import annotations

import dataclasses
import enum
import math
from typing import Any, Dict, List, Union

from shapstats.curves import FitFamily, FitResult
from shapstats.significance import TestName, TestResult

from .interaction import ABOVE, BELOW, InteractionFinding, InteractionGroup
from .univariate import (
    CategoricalFinding,
    CategoryComparison,
    ContinuousFinding,
    DegenerateFinding,
    Finding,
)

"""
Plain-language sentences for findings.

Only results below the significance level get a pattern sentence; an
analyzed feature with nothing significant gets exactly one disclosure
sentence instead. Templates are versioned so that golden outputs can pin a
table version.
"""

TEMPLATES_VERSION = 1


class TemplateId(enum.Enum):
    CATEGORY_HIGHER = "category_higher"
    CATEGORY_LOWER = "category_lower"
    CATEGORIES_DIFFER = "categories_differ"
    OMNIBUS_DIFFER = "omnibus_differ"
    TUKEY_PAIR = "tukey_pair"
    CATEGORICAL_NONE = "categorical_none"
    CATEGORICAL_UNTESTABLE = "categorical_untestable"
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    SIGMOID = "sigmoid"
    CONTINUOUS_NONE = "continuous_none"
    DEGENERATE = "degenerate"
    INTERACTION_GROUP = "interaction_group"
    INTERACTION_TUKEY = "interaction_tukey"
    INTERACTION_MARGIN = "interaction_margin"
    INTERACTION_ONE_GROUP = "interaction_one_group"
    INTERACTION_NONE = "interaction_none"
    INTERACTION_SKIPPED = "interaction_skipped"


TEMPLATES: Dict[TemplateId, str] = {
    TemplateId.CATEGORY_HIGHER: (
        "For predicting {label}, feature '{feature}' = {category} pushes "
        "predictions higher ({measure} SHAP {centre}, {p})."
    ),
    TemplateId.CATEGORY_LOWER: (
        "For predicting {label}, feature '{feature}' = {category} pushes "
        "predictions lower ({measure} SHAP {centre}, {p})."
    ),
    TemplateId.CATEGORIES_DIFFER: (
        "For predicting {label}, '{feature}' = {first} has {direction} SHAP "
        "values than '{feature}' = {second} ({test}, {measure} difference "
        "{estimate}, {p})."
    ),
    TemplateId.OMNIBUS_DIFFER: (
        "For predicting {label}, SHAP values of feature '{feature}' differ "
        "across its {n_categories} tested categories ({test}, {p})."
    ),
    TemplateId.TUKEY_PAIR: (
        "'{feature}' = {first} has {direction} SHAP values than "
        "'{feature}' = {second} (mean difference {estimate}, "
        "simultaneous CI [{low}, {high}], {p})."
    ),
    TemplateId.CATEGORICAL_NONE: (
        "No statistically significant SHAP pattern was found across the "
        "categories of feature '{feature}'."
    ),
    TemplateId.CATEGORICAL_UNTESTABLE: (
        "Feature '{feature}' could not be tested between categories: {reason}."
    ),
    TemplateId.LINEAR: (
        "For predicting {label}, feature '{feature}' follows a linear pattern: "
        "predictions move {direction} as '{feature}' increases "
        "(slope {a}, {p})."
    ),
    TemplateId.QUADRATIC: (
        "For predicting {label}, feature '{feature}' follows a quadratic "
        "pattern opening {opening}, with its {extremum} SHAP value near "
        "'{feature}' = {vertex} (a = {a}, {p})."
    ),
    TemplateId.SIGMOID: (
        "For predicting {label}, feature '{feature}' follows a sigmoid "
        "pattern: predictions shift {direction} as '{feature}' passes "
        "{x0} (L = {amplitude}, a = {a}, {p})."
    ),
    TemplateId.CONTINUOUS_NONE: (
        "No statistically significant linear, quadratic, or sigmoid pattern "
        "was found for feature '{feature}'."
    ),
    TemplateId.DEGENERATE: (
        "Feature '{feature}' is constant and was not analyzed."
    ),
    TemplateId.INTERACTION_GROUP: (
        "When '{partner}' {group}, SHAP values of '{feature}' differ between "
        "its categories ({test}, {p})."
    ),
    TemplateId.INTERACTION_TUKEY: (
        "When '{partner}' {group}, '{feature}' = {first} has {direction} SHAP "
        "values than '{feature}' = {second} (mean difference {estimate}, {p})."
    ),
    TemplateId.INTERACTION_MARGIN: (
        "The {family} pattern of '{feature}' differs between samples where "
        "'{partner}' {group_a} and where '{partner}' {group_b} ({test}, {p})."
    ),
    TemplateId.INTERACTION_ONE_GROUP: (
        "A significant {family} pattern of '{feature}' was found only where "
        "'{partner}' {group}, so there is no second group to compare."
    ),
    TemplateId.INTERACTION_NONE: (
        "No statistically significant modulation of '{feature}' by "
        "'{partner}' was found."
    ),
    TemplateId.INTERACTION_SKIPPED: (
        "The interaction of '{feature}' with '{partner}' was not analyzed: "
        "{reason}."
    ),
}


@dataclasses.dataclass(frozen=True)
class Sentence:
    template_id: TemplateId
    rendered: str
    finding_ref: str


def fmt(value: float) -> str:
    return f"{value:#.3g}"


def fmt_signed(value: float) -> str:
    return f"{value:+#.3g}"


def fmt_p(p: float) -> str:
    if p < 0.001:
        return "p < 0.001"
    return f"p = {p:#.3g}"


def fill(template_id: TemplateId, finding_ref: str, **values: Any) -> Sentence:
    return Sentence(
        template_id=template_id,
        rendered=TEMPLATES[template_id].format(**values),
        finding_ref=finding_ref,
    )


def _direction(value: float) -> str:
    return "higher" if value > 0 else "lower"


def _measure(test: TestResult) -> str:
    return "mean" if test.parametric_route else "median"


def _category_sentences(
    comparison: CategoryComparison, feature: str, label: str, alpha: float, ref: str
) -> List[Sentence]:
    out = []
    for category in comparison.per_category:
        test = category.zero_test
        if test is None or not test.significant(alpha):
            continue
        # the direction follows the statistic the zero test used
        centre = category.mean_shap if test.estimate is None else test.estimate
        template = (
            TemplateId.CATEGORY_HIGHER if centre > 0 else TemplateId.CATEGORY_LOWER
        )
        out.append(
            fill(
                template,
                f"{ref}/category={category.label}",
                label=label,
                feature=feature,
                category=category.label,
                measure=_measure(test),
                centre=fmt_signed(centre),
                p=fmt_p(test.p_value),
            )
        )
    return out


def _between_sentences(
    comparison: CategoryComparison, feature: str, label: str, alpha: float, ref: str
) -> List[Sentence]:
    between = comparison.between
    if between is None or not between.significant(alpha):
        return []
    if between.test_name in (TestName.T_TWO_SAMPLE, TestName.RANK_SUM):
        assert between.group_labels is not None and between.estimate is not None
        first, second = between.group_labels
        estimate = between.estimate
        if estimate < 0:
            first, second, estimate = second, first, -estimate
        return [
            fill(
                TemplateId.CATEGORIES_DIFFER,
                f"{ref}/between",
                label=label,
                feature=feature,
                first=first,
                second=second,
                direction="higher",
                test=between.test_name.display(),
                measure=_measure(between),
                estimate=fmt_signed(estimate),
                p=fmt_p(between.p_value),
            )
        ]
    n_tested = len(comparison.per_category) - len(comparison.excluded)
    out = [
        fill(
            TemplateId.OMNIBUS_DIFFER,
            f"{ref}/between",
            label=label,
            feature=feature,
            n_categories=n_tested,
            test=between.test_name.display(),
            p=fmt_p(between.p_value),
        )
    ]
    for pair in comparison.posthoc or []:
        if not pair.significant(alpha):
            continue
        assert pair.group_labels is not None and pair.estimate is not None
        assert pair.interval is not None
        first, second = pair.group_labels
        out.append(
            fill(
                TemplateId.TUKEY_PAIR,
                f"{ref}/tukey={first},{second}",
                feature=feature,
                first=first,
                second=second,
                direction=_direction(pair.estimate),
                estimate=fmt_signed(pair.estimate),
                low=fmt(pair.interval[0]),
                high=fmt(pair.interval[1]),
                p=fmt_p(pair.p_value),
            )
        )
    return out


def _fit_sentence(fit: FitResult, feature: str, label: str, ref: str) -> Sentence:
    assert fit.p_value_a is not None
    c = fit.coefficients
    p = fmt_p(fit.p_value_a)
    match fit.family:
        case FitFamily.LINEAR:
            return fill(
                TemplateId.LINEAR,
                ref,
                label=label,
                feature=feature,
                direction=_direction(c["a"]),
                a=fmt_signed(c["a"]),
                p=p,
            )
        case FitFamily.QUADRATIC:
            vertex = -c["b"] / (2.0 * c["a"]) if c["a"] != 0 else math.nan
            return fill(
                TemplateId.QUADRATIC,
                ref,
                label=label,
                feature=feature,
                opening="upward" if c["a"] > 0 else "downward",
                extremum="lowest" if c["a"] > 0 else "highest",
                vertex=fmt(vertex),
                a=fmt_signed(c["a"]),
                p=p,
            )
        case FitFamily.SIGMOID:
            return fill(
                TemplateId.SIGMOID,
                ref,
                label=label,
                feature=feature,
                direction=_direction(c["a"] * c["L"]),
                x0=fmt(c["x0"]),
                amplitude=fmt_signed(c["L"]),
                a=fmt_signed(c["a"]),
                p=p,
            )
    raise LookupError(fit.family)


def _univariate_sentences(finding: Finding, label: str, alpha: float) -> List[Sentence]:
    ref = f"univariate/{finding.feature_name}"
    feature = finding.feature_name
    match finding:
        case DegenerateFinding():
            return [fill(TemplateId.DEGENERATE, ref, feature=feature)]
        case ContinuousFinding():
            best = finding.selection.best
            if best is None:
                return [fill(TemplateId.CONTINUOUS_NONE, ref, feature=feature)]
            return [_fit_sentence(best, feature, label, f"{ref}/{best.family.value}")]
        case CategoricalFinding():
            comparison = finding.comparison
            out = _category_sentences(comparison, feature, label, alpha, ref)
            out += _between_sentences(comparison, feature, label, alpha, ref)
            if comparison.between is None:
                out.append(
                    fill(
                        TemplateId.CATEGORICAL_UNTESTABLE,
                        f"{ref}/between",
                        feature=feature,
                        reason=comparison.untestable,
                    )
                )
            if not out:
                out.append(fill(TemplateId.CATEGORICAL_NONE, ref, feature=feature))
            return out
    raise LookupError(finding)


def describe_group(group: str, continuous_partner: bool) -> str:
    if continuous_partner:
        assert group in (BELOW, ABOVE), group
        return f"is {group} its mean"
    return f"= {group}"


def _group_sentences(
    finding: InteractionFinding, group: InteractionGroup, alpha: float, ref: str
) -> List[Sentence]:
    comparison = group.comparison
    if comparison is None or comparison.between is None:
        return []
    between = comparison.between
    if not between.significant(alpha):
        return []
    assert finding.case is not None
    where = describe_group(group.label, finding.case.continuous_partner)
    out = [
        fill(
            TemplateId.INTERACTION_GROUP,
            f"{ref}/group={group.label}",
            partner=finding.partner_name,
            group=where,
            feature=finding.target_name,
            test=between.test_name.display(),
            p=fmt_p(between.p_value),
        )
    ]
    for pair in comparison.posthoc or []:
        if not pair.significant(alpha):
            continue
        assert pair.group_labels is not None and pair.estimate is not None
        first, second = pair.group_labels
        out.append(
            fill(
                TemplateId.INTERACTION_TUKEY,
                f"{ref}/group={group.label}/tukey={first},{second}",
                partner=finding.partner_name,
                group=where,
                feature=finding.target_name,
                first=first,
                second=second,
                direction=_direction(pair.estimate),
                estimate=fmt_signed(pair.estimate),
                p=fmt_p(pair.p_value),
            )
        )
    return out


def _interaction_sentences(finding: InteractionFinding, alpha: float) -> List[Sentence]:
    ref = f"interaction/{finding.target_name}/{finding.partner_name}"
    names = dict(feature=finding.target_name, partner=finding.partner_name)
    if finding.skipped or finding.case is None:
        return [
            fill(TemplateId.INTERACTION_SKIPPED, ref, reason=finding.skipped, **names)
        ]

    continuous_partner = finding.case.continuous_partner
    out: List[Sentence] = []
    if finding.case.categorical_target:
        if not finding.significant:
            return [fill(TemplateId.INTERACTION_NONE, ref, **names)]
        for group in finding.groups:
            out += _group_sentences(finding, group, alpha, ref)
    else:
        for margin in finding.margin_tests:
            if not margin.result.significant(alpha):
                continue
            a, b = margin.groups
            family = _family_of(finding)
            out.append(
                fill(
                    TemplateId.INTERACTION_MARGIN,
                    f"{ref}/margin={a},{b}",
                    family=family,
                    group_a=describe_group(a, continuous_partner),
                    group_b=describe_group(b, continuous_partner),
                    test=margin.result.test_name.display(),
                    p=fmt_p(margin.result.p_value),
                    **names,
                )
            )
        fitted = [
            g for g in finding.groups if g.fit is not None and g.fit.significant(alpha)
        ]
        if len(fitted) == 1:
            out.append(
                fill(
                    TemplateId.INTERACTION_ONE_GROUP,
                    f"{ref}/group={fitted[0].label}",
                    family=_family_of(finding),
                    group=describe_group(fitted[0].label, continuous_partner),
                    **names,
                )
            )
    if not out:
        out.append(fill(TemplateId.INTERACTION_NONE, ref, **names))
    return out


def _family_of(finding: InteractionFinding) -> str:
    for group in finding.groups:
        if group.fit is not None:
            return group.fit.family.value
    return "fitted"


def render_sentences(
    finding: Union[Finding, InteractionFinding], label_name: str, alpha: float
) -> List[Sentence]:
    """Every sentence for a finding, headline first."""
    if isinstance(finding, InteractionFinding):
        return _interaction_sentences(finding, alpha)
    return _univariate_sentences(finding, label_name, alpha)


def render_sentence(
    finding: Union[Finding, InteractionFinding],
    label_name: str,
    alpha: float = 0.05,
) -> Sentence:
    return render_sentences(finding, label_name, alpha)[0]
