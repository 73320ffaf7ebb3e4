from __future__ import annotations

import dataclasses
import logging
from typing import List, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from shapstats import curves  # noqa: E402
from shapstats.significance import TestResult  # noqa: E402

from .errors import OutputError  # noqa: E402
from .interaction import InteractionFinding  # noqa: E402
from .parse import DatasetBundle  # noqa: E402
from .selection import CutAnalysis, FeatureRanking  # noqa: E402
from .univariate import (  # noqa: E402
    CategoricalFinding,
    ContinuousFinding,
    Finding,
    format_category,
)

"""
Plot payloads and their SVG rendering.

Payloads carry plain data only; rendering the same payload twice gives the
same bytes (fixed hash salt, text kept as text, no date in the metadata).
Artists that tests and readers may want to find carry stable SVG ids.
"""

logger = logging.getLogger(__name__)

_RC = {
    "svg.hashsalt": "clesh",
    "svg.fonttype": "none",
    "figure.figsize": (6.4, 4.8),
    "font.size": 9,
}
_METADATA = {"Date": None, "Creator": None}
_PALETTE = ("tab:blue", "tab:orange", "tab:green", "tab:red", "tab:purple", "tab:brown")
CURVE_POINTS = 200


@dataclasses.dataclass(frozen=True)
class SelectionPayload:
    feature_names: Tuple[str, ...]
    ranked_means: np.ndarray
    cut_positions: Tuple[int, ...]
    chosen_k: int


@dataclasses.dataclass(frozen=True)
class SummaryPayload:
    feature_names: Tuple[str, ...]
    shap_columns: Tuple[np.ndarray, ...]


@dataclasses.dataclass(frozen=True)
class BoxPayload:
    title: str
    xlabel: str
    labels: Tuple[str, ...]
    groups: Tuple[np.ndarray, ...]


@dataclasses.dataclass(frozen=True)
class GroupedBoxPayload:
    """Boxes of `categories` within each partner group, colored by group."""

    title: str
    xlabel: str
    group_labels: Tuple[str, ...]
    categories: Tuple[str, ...]
    # values[g][c]; an empty array leaves a gap
    values: Tuple[Tuple[np.ndarray, ...], ...]


@dataclasses.dataclass(frozen=True)
class TukeyPayload:
    title: str
    pairs: Tuple[str, ...]
    estimates: Tuple[float, ...]
    intervals: Tuple[Tuple[float, float], ...]
    significant: Tuple[bool, ...]


@dataclasses.dataclass(frozen=True)
class PointSet:
    label: str
    x: np.ndarray
    y: np.ndarray


@dataclasses.dataclass(frozen=True)
class Curve:
    label: str
    x: np.ndarray
    y: np.ndarray
    group: int = 0


@dataclasses.dataclass(frozen=True)
class ScatterPayload:
    title: str
    xlabel: str
    points: Tuple[PointSet, ...]
    curves: Tuple[Curve, ...]


Payload = Union[
    SelectionPayload,
    SummaryPayload,
    BoxPayload,
    GroupedBoxPayload,
    TukeyPayload,
    ScatterPayload,
]


def _draw_selection(fig: Figure, payload: SelectionPayload) -> None:
    ax = fig.add_subplot()
    ranks = np.arange(1, len(payload.ranked_means) + 1)
    (line,) = ax.plot(ranks, payload.ranked_means, marker="o", markersize=3)
    line.set_gid("mean-abs-shap")
    for k in payload.cut_positions:
        cut = ax.axvline(k + 0.5, color="grey", linestyle=":", linewidth=0.8)
        cut.set_gid(f"cut-{k}")
    chosen = ax.axvline(payload.chosen_k + 0.5, color="tab:red", linewidth=1.2)
    chosen.set_gid("chosen")
    ax.set_xlabel("feature rank")
    ax.set_ylabel("mean |SHAP value|")
    ax.set_title(
        f"{payload.chosen_k} important features, {len(payload.cut_positions)} cuts"
    )


def _draw_summary(fig: Figure, payload: SummaryPayload) -> None:
    ax = fig.add_subplot()
    n = len(payload.feature_names)
    positions = np.arange(n, 0, -1)
    boxes = ax.boxplot(list(payload.shap_columns), positions=positions, vert=False)
    for i, box in enumerate(boxes["boxes"]):
        box.set_gid(f"box-{i}")
    ax.set_yticks(positions, labels=list(payload.feature_names))
    ax.axvline(0.0, color="grey", linewidth=0.6)
    ax.set_xlabel("SHAP value")


def _draw_box(fig: Figure, payload: BoxPayload) -> None:
    ax = fig.add_subplot()
    positions = np.arange(1, len(payload.groups) + 1)
    boxes = ax.boxplot(list(payload.groups), positions=positions)
    for i, box in enumerate(boxes["boxes"]):
        box.set_gid(f"box-{i}")
    ax.set_xticks(positions, labels=list(payload.labels))
    ax.axhline(0.0, color="grey", linewidth=0.6)
    ax.set_xlabel(payload.xlabel)
    ax.set_ylabel("SHAP value")
    ax.set_title(payload.title)


def _draw_grouped_box(fig: Figure, payload: GroupedBoxPayload) -> None:
    ax = fig.add_subplot()
    n_groups = len(payload.group_labels)
    width = 0.8 / max(n_groups, 1)
    for g, label in enumerate(payload.group_labels):
        color = _PALETTE[g % len(_PALETTE)]
        kept = [
            (c, values)
            for c, values in enumerate(payload.values[g])
            if len(values)
        ]
        if not kept:
            continue
        positions = [c + 1 + (g - (n_groups - 1) / 2.0) * width for c, _ in kept]
        boxes = ax.boxplot(
            [values for _, values in kept],
            positions=positions,
            widths=width * 0.9,
            patch_artist=True,
        )
        for (c, _), box in zip(kept, boxes["boxes"]):
            box.set_facecolor(color)
            box.set_gid(f"box-{g}-{c}")
        boxes["boxes"][0].set_label(label)
    ax.set_xticks(
        np.arange(1, len(payload.categories) + 1), labels=list(payload.categories)
    )
    ax.axhline(0.0, color="grey", linewidth=0.6)
    ax.legend(loc="best")
    ax.set_xlabel(payload.xlabel)
    ax.set_ylabel("SHAP value")
    ax.set_title(payload.title)


def _draw_tukey(fig: Figure, payload: TukeyPayload) -> None:
    ax = fig.add_subplot()
    n = len(payload.pairs)
    positions = np.arange(n, 0, -1)
    for i, (estimate, (low, high), significant) in enumerate(
        zip(payload.estimates, payload.intervals, payload.significant)
    ):
        bar = ax.errorbar(
            [estimate],
            [positions[i]],
            xerr=[[estimate - low], [high - estimate]],
            fmt="o",
            color="tab:red" if significant else "tab:blue",
            capsize=3,
        )
        bar.lines[0].set_gid(f"pair-{i}")
    ax.axvline(0.0, color="grey", linewidth=0.6)
    ax.set_yticks(positions, labels=list(payload.pairs))
    ax.set_xlabel("difference in mean SHAP value")
    ax.set_title(payload.title)


def _draw_scatter(fig: Figure, payload: ScatterPayload) -> None:
    ax = fig.add_subplot()
    many = len(payload.points) > 1
    for i, points in enumerate(payload.points):
        color = _PALETTE[i % len(_PALETTE)]
        scatter = ax.scatter(
            points.x,
            points.y,
            s=6,
            alpha=0.6,
            color=color,
            label=points.label if many else None,
        )
        scatter.set_gid(f"points-{i}")
    for i, curve in enumerate(payload.curves):
        color = _PALETTE[curve.group % len(_PALETTE)] if many else "black"
        (line,) = ax.plot(
            curve.x, curve.y, color=color, linewidth=1.5, label=curve.label
        )
        line.set_gid(f"curve-{i}")
    if many or payload.curves:
        ax.legend(loc="best")
    ax.set_xlabel(payload.xlabel)
    ax.set_ylabel("SHAP value")
    ax.set_title(payload.title)


def _draw(fig: Figure, payload: Payload) -> None:
    match payload:
        case SelectionPayload():
            _draw_selection(fig, payload)
        case SummaryPayload():
            _draw_summary(fig, payload)
        case BoxPayload():
            _draw_box(fig, payload)
        case GroupedBoxPayload():
            _draw_grouped_box(fig, payload)
        case TukeyPayload():
            _draw_tukey(fig, payload)
        case ScatterPayload():
            _draw_scatter(fig, payload)
        case _:
            raise LookupError(payload)


def render_plot(payload: Payload, path: str) -> str:
    try:
        with matplotlib.rc_context(_RC):
            fig = Figure()
            _draw(fig, payload)
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata=_METADATA)
    except OSError as e:
        raise OutputError(f"cannot write plot {path}: {e}") from None
    logger.debug("wrote %s", path)
    return path


def selection_payload(
    bundle: DatasetBundle, ranking: FeatureRanking, cuts: CutAnalysis
) -> SelectionPayload:
    return SelectionPayload(
        feature_names=tuple(bundle.feature_names[i] for i in ranking.order),
        ranked_means=ranking.ranked_means(),
        cut_positions=tuple(cuts.cut_positions),
        chosen_k=cuts.chosen_k,
    )


def summary_payload(bundle: DatasetBundle, important: Sequence[int]) -> SummaryPayload:
    return SummaryPayload(
        feature_names=tuple(bundle.feature_names[i] for i in important),
        shap_columns=tuple(bundle.shap_column(i) for i in important),
    )


def _tukey(
    title: str, pairs: Sequence[TestResult], alpha: float
) -> Optional[TukeyPayload]:
    if not pairs:
        return None
    labels = [p.group_labels or ("", "") for p in pairs]
    return TukeyPayload(
        title=title,
        pairs=tuple(f"{a} - {b}" for a, b in labels),
        estimates=tuple(float(p.estimate or 0.0) for p in pairs),
        intervals=tuple(p.interval or (0.0, 0.0) for p in pairs),
        significant=tuple(p.significant(alpha) for p in pairs),
    )


def _curve(
    fit: curves.FitResult, x: np.ndarray, label: str, group: int = 0
) -> Curve:
    grid = np.linspace(float(x.min()), float(x.max()), CURVE_POINTS)
    return Curve(label=label, x=grid, y=curves.evaluate_fit(fit, grid), group=group)


def univariate_payloads(
    finding: Finding, bundle: DatasetBundle, alpha: float
) -> List[Tuple[str, Payload]]:
    """(suffix, payload) pairs for one univariate finding."""
    name = finding.feature_name
    values = bundle.column(finding.feature)
    shap = bundle.shap_column(finding.feature)
    match finding:
        case CategoricalFinding():
            out: List[Tuple[str, Payload]] = [
                (
                    "box",
                    BoxPayload(
                        title=name,
                        xlabel=name,
                        labels=tuple(
                            f"{c.label} (n={c.n})" for c in finding.per_category
                        ),
                        groups=tuple(
                            shap[values == c.value] for c in finding.per_category
                        ),
                    ),
                )
            ]
            tukey = _tukey(f"{name}: Tukey HSD", finding.posthoc or [], alpha)
            if tukey is not None:
                out.append(("tukey", tukey))
            return out
        case ContinuousFinding():
            best = finding.selection.best
            fitted = () if best is None else (_curve(best, values, best.family.value),)
            return [
                (
                    "scatter",
                    ScatterPayload(
                        title=name,
                        xlabel=name,
                        points=(PointSet(label=name, x=values, y=shap),),
                        curves=fitted,
                    ),
                )
            ]
    return []


def interaction_payloads(
    finding: InteractionFinding, bundle: DatasetBundle, alpha: float
) -> List[Tuple[str, Payload]]:
    if finding.case is None:
        return []
    values = bundle.column(finding.target)
    shap = bundle.shap_column(finding.target)
    partition = np.array(finding.partition)
    title = f"{finding.target_name} by {finding.partner_name}"
    group_titles = tuple(f"{finding.partner_name} {g.label}" for g in finding.groups)

    if finding.case.categorical_target:
        categories = np.unique(values)
        out: List[Tuple[str, Payload]] = [
            (
                "box",
                GroupedBoxPayload(
                    title=title,
                    xlabel=finding.target_name,
                    group_labels=group_titles,
                    categories=tuple(format_category(c) for c in categories),
                    values=tuple(
                        tuple(
                            shap[(partition == g.label) & (values == c)]
                            for c in categories
                        )
                        for g in finding.groups
                    ),
                ),
            )
        ]
        for i, group in enumerate(finding.groups):
            if group.comparison is None:
                continue
            tukey = _tukey(
                f"{title}: {group_titles[i]}", group.comparison.posthoc or [], alpha
            )
            if tukey is not None:
                out.append((f"tukey_{i}", tukey))
        return out

    points = []
    fitted = []
    for i, group in enumerate(finding.groups):
        mask = partition == group.label
        points.append(PointSet(label=group_titles[i], x=values[mask], y=shap[mask]))
        if group.fit is not None and group.fit.converged:
            fitted.append(_curve(group.fit, values[mask], group_titles[i], i))
    return [
        (
            "scatter",
            ScatterPayload(
                title=title,
                xlabel=finding.target_name,
                points=tuple(points),
                curves=tuple(fitted),
            ),
        )
    ]

