from __future__ import annotations

import base64
import dataclasses
import hashlib
import html
import logging
import os
import re
import shutil
from typing import Any, Dict, List, Optional, Tuple

import json5
import markdown

from shapstats.curves import SIGMOID_SPAN

from . import plots
from .config import Config
from .errors import OutputError
from .interaction import InteractionFinding
from .notes import NoteLog
from .parse import DatasetBundle
from .selection import CutAnalysis, CutRule, FeatureKind, FeatureRanking
from .sentences import TEMPLATES_VERSION, render_sentences
from .univariate import Finding, is_significant

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"

REPORT_MD = "report.md"
REPORT_HTML = "report.html"
MANIFEST = "manifest.json"
UNIVARIATE_DIR = "univariate_analysis"
INTERACTION_DIR = "interaction_analysis"
SELECTION_PLOT = "feature_selection.svg"
SUMMARY_PLOT = "shap_summary.svg"

SECTIONS = (
    "Methods",
    "Number of important features",
    "Univariate analysis",
    "Interaction analysis",
    "Caveats",
)


@dataclasses.dataclass
class AnalysisReport:
    bundle: DatasetBundle
    config: Config
    ranking: FeatureRanking
    cuts: CutAnalysis
    important: List[int]
    kinds: List[FeatureKind]
    univariate: List[Finding]
    interactions: List[InteractionFinding]
    notes: NoteLog

    @property
    def label_name(self) -> str:
        return self.bundle.label_name

    def n_significant_univariate(self) -> int:
        return sum(is_significant(f, self.config.p_univariate) for f in self.univariate)

    def n_significant_interactions(self) -> int:
        return sum(f.significant for f in self.interactions)


@dataclasses.dataclass(frozen=True)
class ManifestEntry:
    path: str
    kind: str
    sha256: Optional[str]


@dataclasses.dataclass(frozen=True)
class ReportManifest:
    files: List[ManifestEntry]
    config_snapshot: Dict[str, Any]
    tool_version: str

    def paths(self) -> List[str]:
        return [entry.path for entry in self.files]

    def to_json(self) -> Dict[str, Any]:
        return {
            "files": [dataclasses.asdict(entry) for entry in self.files],
            "config": self.config_snapshot,
            "version": self.tool_version,
        }


@dataclasses.dataclass(frozen=True)
class PlotRef:
    path: str
    caption: str


def _digest(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def check_output_dir(path: str) -> None:
    """Only an empty directory or a previous run's output may be replaced."""
    if not os.path.exists(path):
        return
    if not os.path.isdir(path):
        raise OutputError(f"output path {path} exists and is not a directory")
    entries = os.listdir(path)
    if entries and MANIFEST not in entries:
        raise OutputError(
            f"refusing to overwrite {path}: it is not empty and holds no {MANIFEST}"
        )


def prepare_output_dir(path: str) -> None:
    check_output_dir(path)
    try:
        if os.path.exists(path):
            shutil.rmtree(path)
        os.makedirs(os.path.join(path, UNIVARIATE_DIR))
        os.makedirs(os.path.join(path, INTERACTION_DIR))
    except OSError as e:
        raise OutputError(f"cannot create output directory {path}: {e}") from None


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_") or "feature"


def _cell(text: Any) -> str:
    return str(text).replace("|", "\\|")


def _image(ref: PlotRef) -> str:
    return f"![{ref.caption}]({ref.path})"


class _Writer:
    """Renders plots under the output root and remembers what it wrote."""

    def __init__(self, root: str):
        self.root = root
        self.written: List[Tuple[str, str]] = []

    def plot(self, relpath: str, payload: plots.Payload, caption: str) -> PlotRef:
        plots.render_plot(payload, os.path.join(self.root, *relpath.split("/")))
        self.written.append((relpath, "plot"))
        return PlotRef(path=relpath, caption=caption)

    def text(self, relpath: str, content: str) -> None:
        try:
            with open(os.path.join(self.root, relpath), "w", encoding="utf-8") as f:
                f.write(content)
        except OSError as e:
            raise OutputError(f"cannot write {relpath}: {e}") from None
        self.written.append((relpath, "report"))


def _methods(report: AnalysisReport) -> List[str]:
    config = report.config
    if config.strict_paired_nonparametric:
        fallback = "a Wilcoxon signed-rank test on the paired differences"
    else:
        fallback = "a Wilcoxon rank-sum test"
    lines = [
        f"Label: **{report.label_name}**. "
        f"{report.bundle.n_samples} samples, {report.bundle.n_features} features.",
        "",
        "Features were ranked by mean |SHAP value|. Each adjacent pair of ranked "
        "features was compared on |SHAP| (paired t-test when both samples pass a "
        f"Shapiro-Wilk normality test, otherwise {fallback}), and a significant "
        "difference marks a cut. The number of important features is the cut "
        "within the candidate range with the largest drop in mean |SHAP| to the "
        "next cut.",
        "",
        "Binary and discrete features were analyzed by category: each category's "
        "SHAP values were tested against zero, and categories were compared with "
        "two-sample tests (binary) or one-way ANOVA / Kruskal-Wallis with Tukey HSD "
        "follow-up (discrete). Continuous features were fitted with linear, "
        "quadratic and sigmoid functions of the feature value; a fit is "
        "significant when its coefficient a is. Among significant fits the one "
        "with the lowest RMSE after a Schwarz (BIC) charge for its number of "
        "coefficients is reported. Sigmoid parameter significance uses "
        "asymptotic (Jacobian-based) standard errors, and a sigmoid whose "
        "midpoint lies outside the data or whose height exceeds "
        f"{SIGMOID_SPAN:g} times the SHAP range is not considered.",
        "",
        "For each important feature the strongest interaction partner was found by "
        "windowed correlation of the feature's SHAP values with every other "
        "feature. Samples were split by the partner (its categories, or below/above "
        "its mean) and the analysis was repeated per group. A categorical feature "
        "interacts when its category effect is significant in some groups and not "
        "others, or points in opposite directions. For continuous features, "
        "separate fits of the groups were compared with one pooled fit by an "
        "extra-sum-of-squares F-test on the SHAP values; duplicate x values are "
        "weighted once per occurrence.",
        "",
        "| Setting | Value |",
        "| --- | --- |",
    ]
    for key, value in config.snapshot().items():
        lines.append(f"| {_cell(key)} | {_cell(value)} |")
    lines.append(f"| tool_version | {TOOL_VERSION} |")
    lines.append(f"| sentence_templates | v{TEMPLATES_VERSION} |")
    return lines


def _selection(
    report: AnalysisReport, selection_plot: PlotRef, summary_plot: Optional[PlotRef]
) -> List[str]:
    cuts = report.cuts
    how = {
        CutRule.MANUAL: "set manually (manual_num)",
        CutRule.CUT: "chosen from the significance cuts",
        CutRule.FALLBACK_BELOW: "a fallback: no cut fell within the candidate range",
        CutRule.FALLBACK_DEFAULT: "a fallback: no usable cut was found",
    }[cuts.rule]
    positions = ", ".join(str(k) for k in cuts.cut_positions) or "none"
    lines = [
        f"**{cuts.chosen_k}** important features; this number was {how}.",
        "",
        f"Cut positions (number of features kept): {positions}.",
        "",
        _image(selection_plot),
        "",
        "| Rank | Feature | Mean abs SHAP | Kind | Unique values |",
        "| --- | --- | --- | --- | --- |",
    ]
    for rank, feature in enumerate(report.important, start=1):
        kind = report.kinds[feature]
        lines.append(
            f"| {rank} | {_cell(report.bundle.feature_names[feature])} | "
            f"{report.ranking.mean_abs_shap[feature]:.4g} | {kind.kind.value} | "
            f"{kind.n_unique} |"
        )
    if summary_plot is not None:
        lines += ["", _image(summary_plot)]
    return lines


def _bullets(sentences: List[str]) -> List[str]:
    return [f"- {s}" for s in sentences]


def assemble_report(
    report: AnalysisReport,
    selection_plot: PlotRef,
    summary_plot: Optional[PlotRef],
    univariate_plots: List[List[PlotRef]],
    interaction_plots: List[List[PlotRef]],
) -> str:
    config = report.config
    label = report.label_name
    lines = [f"# SHAP pattern report: {label}", ""]

    lines += [f"## {SECTIONS[0]}", ""] + _methods(report) + [""]
    lines += [f"## {SECTIONS[1]}", ""]
    lines += _selection(report, selection_plot, summary_plot) + [""]

    lines += [f"## {SECTIONS[2]}", ""]
    if report.n_significant_univariate() == 0:
        lines += ["No significant univariate patterns were found.", ""]
    for rank, (finding, refs) in enumerate(
        zip(report.univariate, univariate_plots), start=1
    ):
        lines += [f"### {rank}. {finding.feature_name} ({finding.kind.kind.value})", ""]
        sentences = render_sentences(finding, label, config.p_univariate)
        lines += _bullets([s.rendered for s in sentences]) + [""]
        for ref in refs:
            lines += [_image(ref), ""]

    lines += [f"## {SECTIONS[3]}", ""]
    if not report.interactions:
        lines += ["No interactions were analyzed.", ""]
    elif report.n_significant_interactions() == 0:
        lines += ["No significant interaction patterns were found.", ""]
    for finding, refs in zip(report.interactions, interaction_plots):
        lines += [
            f"### {finding.target_name} x {finding.partner_name}",
            "",
            f"Interaction score {finding.partner_score:.4g}.",
            "",
        ]
        sentences = render_sentences(finding, label, config.p_interaction)
        lines += _bullets([s.rendered for s in sentences]) + [""]
        for ref in refs:
            lines += [_image(ref), ""]

    lines += [f"## {SECTIONS[4]}", ""]
    caveats = report.notes.caveats()
    for note in caveats:
        prefix = f"'{note.feature}': " if note.feature else ""
        lines.append(f"- {prefix}{note.text}")
        lines += [f"  - {detail}" for detail in note.details]
    if not caveats:
        lines.append("No caveats.")
    return "\n".join(lines).rstrip("\n") + "\n"


_IMAGE = re.compile(r"!\[([^\]]*)\]\(([^)\s]+\.svg)\)")

_HTML = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>{title}</title>
<style>
body {{ font-family: sans-serif; max-width: 60em; margin: auto; padding: 1em; }}
img {{ max-width: 100%; }}
table {{ border-collapse: collapse; }}
td, th {{ border: 1px solid #ccc; padding: 2px 6px; }}
</style>
</head>
<body>
{body}
</body>
</html>
"""


def render_html(report_md: str, root: str, title: str) -> str:
    """Self-contained HTML: plots are inlined as data URIs."""

    def inline(match: re.Match) -> str:
        with open(os.path.join(root, *match.group(2).split("/")), "rb") as f:
            data = base64.b64encode(f.read()).decode("ascii")
        return f"![{match.group(1)}](data:image/svg+xml;base64,{data})"

    body = markdown.markdown(_IMAGE.sub(inline, report_md), extensions=["tables"])
    return _HTML.format(title=html.escape(title), body=body)


def write_report(report: AnalysisReport, config: Config) -> ReportManifest:
    root = config.output_dir
    prepare_output_dir(root)
    writer = _Writer(root)
    alpha_uni = config.p_univariate
    alpha_int = config.p_interaction
    bundle = report.bundle

    selection_plot = writer.plot(
        SELECTION_PLOT,
        plots.selection_payload(bundle, report.ranking, report.cuts),
        "Mean |SHAP| by rank with significance cuts",
    )
    summary_plot = None
    if report.important:
        summary_plot = writer.plot(
            SUMMARY_PLOT,
            plots.summary_payload(bundle, report.important),
            "SHAP values of the important features",
        )

    univariate_plots = []
    for rank, finding in enumerate(report.univariate, start=1):
        refs = []
        for suffix, payload in plots.univariate_payloads(finding, bundle, alpha_uni):
            stem = f"{rank:02d}_{_slug(finding.feature_name)}"
            relpath = f"{UNIVARIATE_DIR}/{stem}_{suffix}.svg"
            caption = f"{finding.feature_name} {suffix}"
            refs.append(writer.plot(relpath, payload, caption))
        univariate_plots.append(refs)

    interaction_plots = []
    for i, interaction in enumerate(report.interactions, start=1):
        refs = []
        target, partner = interaction.target_name, interaction.partner_name
        stem = f"{i:02d}_{_slug(target)}_x_{_slug(partner)}"
        payloads = plots.interaction_payloads(interaction, bundle, alpha_int)
        for suffix, payload in payloads:
            relpath = f"{INTERACTION_DIR}/{stem}_{suffix}.svg"
            caption = f"{target} x {partner} {suffix}"
            refs.append(writer.plot(relpath, payload, caption))
        interaction_plots.append(refs)

    report_md = assemble_report(
        report, selection_plot, summary_plot, univariate_plots, interaction_plots
    )
    writer.text(REPORT_MD, report_md)
    if config.html:
        title = f"SHAP pattern report: {report.label_name}"
        writer.text(REPORT_HTML, render_html(report_md, root, title))

    files = [
        ManifestEntry(
            path=relpath,
            kind=kind,
            sha256=_digest(os.path.join(root, *relpath.split("/"))),
        )
        for relpath, kind in writer.written
    ]
    files.append(ManifestEntry(path=MANIFEST, kind="manifest", sha256=None))
    files.sort(key=lambda entry: entry.path)
    manifest = ReportManifest(
        files=files, config_snapshot=config.snapshot(), tool_version=TOOL_VERSION
    )
    try:
        with open(os.path.join(root, MANIFEST), "w", encoding="utf-8") as f:
            f.write(
                json5.dumps(
                    manifest.to_json(),
                    indent=2,
                    quote_keys=True,
                    trailing_commas=False,
                )
            )
            f.write("\n")
    except OSError as e:
        raise OutputError(f"cannot write {MANIFEST}: {e}") from None
    logger.info("wrote %d files to %s", len(files), root)
    return manifest
