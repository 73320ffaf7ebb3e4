from __future__ import annotations

import dataclasses
import logging
import multiprocessing.pool
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

from shapstats.significance import TestResult

from . import interaction, selection, univariate
from .config import Config
from .errors import InteractionSkipped
from .interaction import InteractionFinding
from .notes import NoteKind, NoteLog
from .parse import DatasetBundle, bundle_from_frames
from .report import AnalysisReport, write_report
from .selection import FeatureKind, Kind
from .univariate import (
    CategoricalFinding,
    CategoryComparison,
    ContinuousFinding,
    Finding,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def _map(worker: Callable[[T], R], items: Sequence[T], threads: int) -> List[R]:
    """Ordered map, on a thread pool when threads > 1."""
    if threads > 1 and len(items) > 1:
        with multiprocessing.pool.ThreadPool(min(threads, len(items))) as pool:
            return pool.map(worker, items)
    return [worker(item) for item in items]


def _note_degenerate(
    notes: NoteLog, name: str, what: str, test: Optional[TestResult]
) -> None:
    if test is not None and test.degenerate:
        notes.note(
            NoteKind.DEGENERATE,
            f"{what}: {test.test_name.display()} is degenerate (too little variation), "
            f"p = {test.p_value:g}",
            feature=name,
        )


def _note_comparison(
    notes: NoteLog, name: str, comparison: CategoryComparison, where: str = ""
) -> None:
    prefix = f"{where}: " if where else ""
    for category in comparison.per_category:
        if category.excluded:
            notes.note(
                NoteKind.EXCLUDED,
                f"{prefix}category {category.label} has {category.n} samples and "
                "was excluded from tests",
                feature=name,
            )
        _note_degenerate(
            notes,
            name,
            f"{prefix}category {category.label} vs zero",
            category.zero_test,
        )
    if comparison.between is None:
        notes.note(
            NoteKind.SKIPPED,
            f"{prefix}no between-category test: {comparison.untestable}",
            feature=name,
        )
    _note_degenerate(notes, name, f"{prefix}between categories", comparison.between)


class UnivariateWorker:
    def __init__(self, bundle: DatasetBundle, config: Config, kinds: List[FeatureKind]):
        self.bundle = bundle
        self.config = config
        self.kinds = kinds

    def run(self, feature: int) -> Tuple[Finding, NoteLog]:
        notes = NoteLog()
        name = self.bundle.feature_names[feature]
        finding = univariate.analyze_feature(
            self.bundle, feature, self.kinds[feature], self.config
        )
        match finding:
            case CategoricalFinding():
                _note_comparison(notes, name, finding.comparison)
            case ContinuousFinding():
                for fit in finding.selection.fits:
                    if fit.degenerate:
                        notes.note(
                            NoteKind.DEGENERATE,
                            f"{fit.family.value} coefficient test is degenerate "
                            "(exact fit or flat SHAP)",
                            feature=name,
                        )
                    elif not fit.converged:
                        notes.note(
                            NoteKind.INFO,
                            f"{fit.family.value} fit failed: {fit.reason}",
                            feature=name,
                        )
            case univariate.DegenerateFinding():
                notes.note(
                    NoteKind.EXCLUDED,
                    "constant feature excluded from univariate analysis",
                    feature=name,
                )
        return finding, notes

    def __call__(self, feature: int) -> Tuple[Finding, NoteLog]:
        try:
            return self.run(feature)
        except Exception:
            logger.exception(
                "univariate analysis failed for %r", self.bundle.feature_names[feature]
            )
            raise


class InteractionWorker:
    def __init__(
        self,
        bundle: DatasetBundle,
        config: Config,
        kinds: List[FeatureKind],
        findings: Dict[int, Finding],
    ):
        self.bundle = bundle
        self.config = config
        self.kinds = kinds
        self.findings = findings

    def _one(
        self, target: int, partner: int, score: float, notes: NoteLog
    ) -> InteractionFinding:
        name = self.bundle.feature_names[target]
        partner_name = self.bundle.feature_names[partner]
        target_finding = self.findings[target]
        try:
            if self.kinds[target].kind.is_categorical:
                finding = interaction.analyze_interaction_categorical_target(
                    self.bundle, target, partner, self.kinds, self.config
                )
            else:
                assert isinstance(target_finding, ContinuousFinding)
                finding = interaction.analyze_interaction_continuous_target(
                    self.bundle,
                    target,
                    partner,
                    self.kinds,
                    target_finding,
                    self.config,
                )
        except InteractionSkipped as e:
            finding = interaction.skipped_finding(self.bundle, target, partner, str(e))
        finding = dataclasses.replace(finding, partner_score=score)

        if finding.skipped:
            notes.note(
                NoteKind.SKIPPED,
                f"interaction with '{partner_name}' skipped: {finding.skipped}",
                feature=name,
            )
            return finding
        for group in finding.groups:
            where = f"with '{partner_name}' {group.label}"
            if group.comparison is not None:
                _note_comparison(notes, name, group.comparison, where)
            elif group.skipped:
                notes.note(
                    NoteKind.SKIPPED,
                    f"{where}: {group.fit.family.value if group.fit else 'fit'} "
                    f"not fitted: {group.skipped}",
                    feature=name,
                )
        for margin in finding.margin_tests:
            _note_degenerate(
                notes,
                name,
                f"margin between '{partner_name}' {margin.groups[0]} "
                f"and {margin.groups[1]}",
                margin.result,
            )
        return finding

    def run(self, target: int) -> Tuple[List[InteractionFinding], NoteLog]:
        notes = NoteLog()
        name = self.bundle.feature_names[target]
        if self.kinds[target].kind is Kind.CONSTANT:
            notes.note(
                NoteKind.SKIPPED, "constant feature has no interactions", feature=name
            )
            return [], notes
        try:
            assignment = interaction.approximate_interactions(
                target, self.bundle, self.config.rng_seed
            )
        except InteractionSkipped as e:
            notes.note(NoteKind.SKIPPED, str(e), feature=name)
            return [], notes
        out = []
        for partner in assignment.top(self.config.interaction_top_k):
            logger.debug(
                "%s: partner %s (score %g)",
                name,
                self.bundle.feature_names[partner],
                assignment.partner_scores[partner],
            )
            score = float(assignment.partner_scores[partner])
            out.append(self._one(target, partner, score, notes))
        return out, notes

    def __call__(self, target: int) -> Tuple[List[InteractionFinding], NoteLog]:
        try:
            return self.run(target)
        except Exception:
            logger.exception(
                "interaction analysis failed for %r", self.bundle.feature_names[target]
            )
            raise


def run_analysis(
    bundle: DatasetBundle, config: Config, threads: int = 1
) -> AnalysisReport:
    """load -> rank -> cuts -> classify -> univariate -> interaction"""
    notes = NoteLog()

    logger.info("stage: rank")
    ranking = selection.rank_features(bundle)

    logger.info("stage: cuts")
    cuts = selection.adjacent_significance_cuts(bundle, ranking, config, threads)
    important = selection.important_features(ranking, cuts.chosen_k)
    notes.note(
        NoteKind.STAGE, f"{cuts.chosen_k} important features ({cuts.rule.value})"
    )
    with notes.indent():
        for rank, test in enumerate(cuts.adjacent_tests, start=1):
            if test.degenerate:
                notes.note(
                    NoteKind.DEGENERATE,
                    f"adjacent test between ranks {rank} and {rank + 1} is degenerate "
                    f"({test.test_name.display()}, p = {test.p_value:g})",
                )
        if cuts.rule.is_fallback:
            notes.note(
                NoteKind.FALLBACK,
                selection.describe_cuts(cuts, config) or cuts.rule.value,
            )

    logger.info("stage: classify")
    kinds = [
        selection.classify_feature_kind(bundle.column(i), config.cont_bound)
        for i in range(bundle.n_features)
    ]
    for feature in important:
        logger.debug(
            "%s: %s (%d unique)",
            bundle.feature_names[feature],
            kinds[feature].kind.value,
            kinds[feature].n_unique,
        )

    logger.info("stage: univariate")
    notes.note(NoteKind.STAGE, "univariate analysis")
    findings: List[Finding] = []
    with notes.indent():
        univariate_worker = UnivariateWorker(bundle, config, kinds)
        for finding, sub in _map(univariate_worker, important, threads):
            findings.append(finding)
            notes.absorb(sub)

    logger.info("stage: interaction")
    notes.note(NoteKind.STAGE, "interaction analysis")
    interactions: List[InteractionFinding] = []
    by_feature = {f.feature: f for f in findings}
    with notes.indent():
        interaction_worker = InteractionWorker(bundle, config, kinds, by_feature)
        for found, sub in _map(interaction_worker, important, threads):
            interactions.extend(found)
            notes.absorb(sub)

    for note in notes.caveats():
        logger.warning("%s%s", f"{note.feature}: " if note.feature else "", note.text)
    return AnalysisReport(
        bundle=bundle,
        config=config,
        ranking=ranking,
        cuts=cuts,
        important=important,
        kinds=kinds,
        univariate=findings,
        interactions=interactions,
        notes=notes,
    )


def clesh(
    features: Any,
    shap_values: Any,
    label_name: str,
    config: Optional[Config] = None,
    threads: int = 1,
) -> AnalysisReport:
    """Run the whole analysis on in-memory data and write the output folder."""
    config = config or Config()
    bundle = bundle_from_frames(features, shap_values, label_name)
    report = run_analysis(bundle, config, threads)
    logger.info("stage: report")
    write_report(report, config)
    return report
