import string

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clesh import sentences
from clesh.interaction import (
    ABOVE,
    BELOW,
    InteractionCase,
    InteractionFinding,
    InteractionGroup,
)
from clesh.selection import FeatureKind, Kind
from clesh.sentences import TemplateId
from clesh.univariate import (
    CategoricalFinding,
    CategoryComparison,
    CategoryStat,
    ContinuousFinding,
    DegenerateFinding,
)
from shapstats.curves import FitFamily, FitResult, FitSelection
from shapstats.significance import TestName, TestResult

LABEL = "Metabolic Syndrome"


def _zero(p: float) -> TestResult:
    return TestResult(TestName.T_ONE_SAMPLE, 4.0, p, True, df=99.0)


def _binary(
    p_one: float, p_between: float = 0.9, mean_one: float = 0.82
) -> CategoricalFinding:
    comparison = CategoryComparison(
        kind=Kind.BINARY,
        per_category=[
            CategoryStat(0.0, "0", 100, -0.01, _zero(0.5)),
            CategoryStat(1.0, "1", 100, mean_one, _zero(p_one)),
        ],
        between=TestResult(
            TestName.T_TWO_SAMPLE,
            0.1,
            p_between,
            True,
            df=198.0,
            group_labels=("1", "0"),
            estimate=0.83,
        ),
        posthoc=None,
    )
    return CategoricalFinding(3, "X", FeatureKind(Kind.BINARY, 2), comparison)


def _continuous(fit: FitResult) -> ContinuousFinding:
    return ContinuousFinding(
        0,
        "glucose",
        FeatureKind(Kind.CONTINUOUS, 300),
        FitSelection([fit], fit, False, [fit]),
    )


def test_formatting() -> None:
    assert sentences.fmt_signed(0.82) == "+0.820"
    assert sentences.fmt_signed(-1.5) == "-1.50"
    assert sentences.fmt(3.0) == "3.00"
    assert sentences.fmt_p(0.0004) == "p < 0.001"
    assert sentences.fmt_p(0.0123) == "p = 0.0123"
    assert sentences.fmt_p(0.5) == "p = 0.500"


def test_binary_category_sentence() -> None:
    rendered = sentences.render_sentences(_binary(0.0003), LABEL, 0.05)
    assert [s.rendered for s in rendered] == [
        "For predicting Metabolic Syndrome, feature 'X' = 1 pushes predictions higher "
        "(mean SHAP +0.820, p < 0.001)."
    ]
    assert rendered[0].template_id is TemplateId.CATEGORY_HIGHER
    assert rendered[0].finding_ref == "univariate/X/category=1"


def test_between_sentence_reads_high_minus_low() -> None:
    rendered = sentences.render_sentences(_binary(0.0003, p_between=0.002), LABEL, 0.05)
    between = rendered[-1]
    assert between.template_id is TemplateId.CATEGORIES_DIFFER
    assert "'X' = 1 has higher SHAP values than 'X' = 0" in between.rendered
    assert "mean difference +0.830" in between.rendered
    assert "two-sample t-test" in between.rendered


def test_rank_route_direction_follows_the_median() -> None:
    # mostly small positive SHAP values with a few large negative ones
    signed_rank = TestResult(TestName.SIGNED_RANK, 1500.0, 0.002, False, estimate=0.2)
    comparison = CategoryComparison(
        kind=Kind.BINARY,
        per_category=[CategoryStat(1.0, "1", 60, -0.05, signed_rank)],
        between=None,
        posthoc=None,
        untestable="only 1 category with at least 3 samples",
    )
    finding = CategoricalFinding(3, "X", FeatureKind(Kind.BINARY, 2), comparison)
    first = sentences.render_sentences(finding, LABEL, 0.05)[0]
    assert first.template_id is TemplateId.CATEGORY_HIGHER
    assert "(median SHAP +0.200, p = 0.00200)" in first.rendered


@given(st.floats(min_value=0.0, max_value=1.0))
def test_no_claim_without_significance(p: float) -> None:
    rendered = sentences.render_sentences(_binary(p), LABEL, 0.05)
    claims = [s for s in rendered if s.template_id is TemplateId.CATEGORY_HIGHER]
    assert bool(claims) == (p < 0.05)
    if not claims:
        assert [s.template_id for s in rendered] == [TemplateId.CATEGORICAL_NONE]


def test_continuous_none() -> None:
    finding = ContinuousFinding(
        0, "glucose", FeatureKind(Kind.CONTINUOUS, 30), FitSelection([], None, True, [])
    )
    assert sentences.render_sentence(finding, LABEL).rendered == (
        "No statistically significant linear, quadratic, or sigmoid pattern "
        "was found for feature 'glucose'."
    )


def test_fit_sentences() -> None:
    linear = FitResult(FitFamily.LINEAR, {"a": -0.02, "b": 1.0}, 0.01, 0.1, True, 300)
    text = sentences.render_sentence(_continuous(linear), LABEL).rendered
    assert "move lower" in text

    quadratic = FitResult(
        FitFamily.QUADRATIC, {"a": 0.5, "b": -27.0, "c": 1.0}, 0.0, 0.1, True, 300
    )
    text = sentences.render_sentence(_continuous(quadratic), LABEL).rendered
    assert "opening upward" in text and "'glucose' = 27.0" in text

    sigmoid = FitResult(
        FitFamily.SIGMOID,
        {"L": 1.2, "a": 0.1, "x0": 126.0, "b": -0.6},
        0.0004,
        0.1,
        True,
        300,
    )
    rendered = sentences.render_sentence(_continuous(sigmoid), LABEL)
    assert rendered.template_id is TemplateId.SIGMOID
    assert rendered.finding_ref == "univariate/glucose/sigmoid"
    assert "shift higher as 'glucose' passes 126." in rendered.rendered
    assert "p < 0.001" in rendered.rendered


def test_degenerate_sentence() -> None:
    kind = FeatureKind(Kind.CONSTANT, 1)
    finding = DegenerateFinding(1, "age", kind, "constant feature")
    rendered = sentences.render_sentence(finding, LABEL)
    assert rendered.template_id is TemplateId.DEGENERATE


def test_interaction_group_sentences() -> None:
    tukey = TestResult(
        TestName.TUKEY_HSD_PAIR,
        9.0,
        0.0001,
        True,
        group_labels=("0", "2"),
        estimate=-1.0,
        interval=(-1.2, -0.8),
    )
    comparison = CategoryComparison(
        Kind.DISCRETE,
        [],
        TestResult(TestName.ANOVA, 50.0, 0.0001, True, df=2.0),
        [tukey],
    )
    quiet = CategoryComparison(
        Kind.DISCRETE, [], TestResult(TestName.ANOVA, 0.1, 0.9, True, df=2.0), None
    )
    finding = InteractionFinding(
        target=6,
        target_name="albuminuria",
        partner=5,
        partner_name="triglycerides",
        case=InteractionCase.CAT_CONT,
        partition=(),
        groups=[
            InteractionGroup(BELOW, 90, comparison=quiet),
            InteractionGroup(ABOVE, 90, comparison=comparison),
        ],
        margin_tests=[],
        significant=True,
    )
    rendered = sentences.render_sentences(finding, LABEL, 0.05)
    assert [s.template_id for s in rendered] == [
        TemplateId.INTERACTION_GROUP,
        TemplateId.INTERACTION_TUKEY,
    ]
    assert rendered[0].rendered.startswith("When 'triglycerides' is above its mean,")
    tukey = rendered[1]
    assert "'albuminuria' = 0 has lower SHAP values than 'albuminuria' = 2" in (
        tukey.rendered
    )
    ref = "interaction/albuminuria/triglycerides/group=above/tukey=0,2"
    assert tukey.finding_ref == ref


def test_interaction_one_group_and_skipped() -> None:
    steep = {"L": 1.0, "a": 2.0, "x0": 5.0, "b": 0.0}
    fit = FitResult(FitFamily.SIGMOID, steep, 0.0, 0.1, True, 200)
    level = {"L": 0.0, "a": 0.0, "x0": 5.0, "b": 0.3}
    flat = FitResult(FitFamily.SIGMOID, level, None, 0.0, False, 200)
    groups = [
        InteractionGroup("0", 200, fit=fit),
        InteractionGroup("1", 200, fit=flat, skipped="flat"),
    ]
    finding = InteractionFinding(
        0, "glucose", 1, "smoker", InteractionCase.CONT_CAT, (), groups, [], False
    )
    rendered = sentences.render_sentences(finding, LABEL, 0.05)
    assert [s.rendered for s in rendered] == [
        "A significant sigmoid pattern of 'glucose' was found only where 'smoker' = 0, "
        "so there is no second group to compare."
    ]
    skipped = InteractionFinding(
        0, "glucose", 1, "smoker", None, (), [], [], False, skipped="too few rows"
    )
    rendered_skip = sentences.render_sentence(skipped, LABEL)
    assert rendered_skip.template_id is TemplateId.INTERACTION_SKIPPED


@pytest.mark.parametrize("template_id", list(TemplateId))
def test_every_template_is_defined(template_id: TemplateId) -> None:
    template = sentences.TEMPLATES[template_id]
    fields = [name for _, name, _, _ in string.Formatter().parse(template) if name]
    assert fields
    assert sentences.TEMPLATES[template_id].endswith(".")


def test_same_effect_in_every_group_is_no_interaction() -> None:
    between = TestResult(
        TestName.T_TWO_SAMPLE, 5.0, 0.0001, True, group_labels=("1", "0"), estimate=0.4
    )
    comparison = CategoryComparison(Kind.BINARY, [], between, None)
    finding = InteractionFinding(
        target=3,
        target_name="smoker",
        partner=0,
        partner_name="age",
        case=InteractionCase.CAT_CONT,
        partition=(),
        groups=[
            InteractionGroup(BELOW, 100, comparison=comparison),
            InteractionGroup(ABOVE, 100, comparison=comparison),
        ],
        margin_tests=[],
        significant=False,
    )
    rendered = sentences.render_sentences(finding, LABEL, 0.05)
    assert [s.template_id for s in rendered] == [TemplateId.INTERACTION_NONE]
