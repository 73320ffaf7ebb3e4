import os
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Dict

import numpy as np
import pytest

from clesh import plots
from clesh.config import Config
from clesh.errors import OutputError
from clesh.selection import FeatureKind, Kind
from clesh.univariate import analyze_feature
from shapstats import curves

from .conftest import bundle_of

SVG = "{http://www.w3.org/2000/svg}"


def _by_id(path: str) -> Dict[str, ET.Element]:
    root = ET.parse(path).getroot()
    return {el.attrib["id"]: el for el in root.iter() if "id" in el.attrib}


def _count(element: ET.Element, tag: str) -> int:
    return sum(1 for el in element.iter(SVG + tag))


def test_scatter_points_and_curve(tmp_path: Path, rng: np.random.Generator) -> None:
    x = rng.uniform(0.0, 1.0, 25)
    y = 2.0 * x + rng.normal(0.0, 0.05, 25)
    fit = curves.fit_linear(x, y)
    payload = plots.ScatterPayload(
        title="age",
        xlabel="age",
        points=(plots.PointSet("age", x, y),),
        curves=(plots._curve(fit, x, "linear"),),
    )
    path = plots.render_plot(payload, os.path.join(str(tmp_path), "scatter.svg"))
    ids = _by_id(path)
    points = ids["points-0"]
    uses = _count(points, "use")
    if uses:
        assert uses == 25
    else:
        assert _count(points, "path") == 25
    assert _count(ids["curve-0"], "path") == 1


def test_box_plot_has_one_box_per_category(
    tmp_path: Path, rng: np.random.Generator
) -> None:
    payload = plots.BoxPayload(
        title="activity",
        xlabel="activity",
        labels=("0", "1", "2", "3"),
        groups=tuple(rng.normal(m, 1.0, 20) for m in range(4)),
    )
    path = plots.render_plot(payload, os.path.join(str(tmp_path), "box.svg"))
    boxes = [key for key in _by_id(path) if key.startswith("box-")]
    assert sorted(boxes) == ["box-0", "box-1", "box-2", "box-3"]


def test_rendering_is_byte_identical(tmp_path: Path, rng: np.random.Generator) -> None:
    payload = plots.TukeyPayload(
        title="activity: Tukey HSD",
        pairs=("0 - 1", "0 - 2", "1 - 2"),
        estimates=(-0.3, -0.6, -0.3),
        intervals=((-0.5, -0.1), (-0.8, -0.4), (-0.5, -0.1)),
        significant=(True, True, True),
    )
    first = plots.render_plot(payload, os.path.join(str(tmp_path), "a.svg"))
    second = plots.render_plot(payload, os.path.join(str(tmp_path), "b.svg"))
    with open(first, "rb") as a, open(second, "rb") as b:
        assert a.read() == b.read()
    ids = _by_id(first)
    assert {"pair-0", "pair-1", "pair-2"} <= set(ids)


def test_selection_and_summary_plots(tmp_path: Path, rng: np.random.Generator) -> None:
    shap = rng.normal(size=(30, 4)) * [4, 3, 2, 1]
    bundle = bundle_of(rng.normal(size=(30, 4)), shap)
    payload = plots.SelectionPayload(
        feature_names=bundle.feature_names,
        ranked_means=np.array([3.2, 2.4, 1.6, 0.8]),
        cut_positions=(1, 3),
        chosen_k=3,
    )
    ids = _by_id(plots.render_plot(payload, os.path.join(str(tmp_path), "sel.svg")))
    assert {"cut-1", "cut-3", "chosen", "mean-abs-shap"} <= set(ids)

    summary = plots.summary_payload(bundle, [0, 1, 2])
    ids = _by_id(plots.render_plot(summary, os.path.join(str(tmp_path), "sum.svg")))
    assert {"box-0", "box-1", "box-2"} <= set(ids)


def test_grouped_boxes(tmp_path: Path, rng: np.random.Generator) -> None:
    payload = plots.GroupedBoxPayload(
        title="albuminuria by triglycerides",
        xlabel="albuminuria",
        group_labels=("triglycerides below", "triglycerides above"),
        categories=("0", "1", "2"),
        values=(
            (rng.normal(size=10), rng.normal(size=10), np.array([])),
            (rng.normal(size=10), rng.normal(size=10), rng.normal(size=10)),
        ),
    )
    ids = _by_id(plots.render_plot(payload, os.path.join(str(tmp_path), "grouped.svg")))
    boxes = {key for key in ids if key.startswith("box-")}
    assert boxes == {"box-0-0", "box-0-1", "box-1-0", "box-1-1", "box-1-2"}


def test_univariate_payloads(rng: np.random.Generator) -> None:
    values = np.repeat([0.0, 1.0, 2.0], 40)
    shap = np.concatenate([rng.normal(m, 0.1, 40) for m in (-1.0, 0.0, 1.0)])
    bundle = bundle_of(values, shap)
    finding = analyze_feature(bundle, 0, FeatureKind(Kind.DISCRETE, 3), Config())
    payloads = plots.univariate_payloads(finding, bundle, 0.05)
    suffixes = [suffix for suffix, _ in payloads]
    assert suffixes == ["box", "tukey"]

    x = rng.uniform(-1.0, 1.0, 100)
    bundle = bundle_of(x, x**2 + rng.normal(0.0, 0.02, 100))
    finding = analyze_feature(bundle, 0, FeatureKind(Kind.CONTINUOUS, 100), Config())
    ((suffix, payload),) = plots.univariate_payloads(finding, bundle, 0.05)
    assert suffix == "scatter"
    assert isinstance(payload, plots.ScatterPayload)
    assert len(payload.curves) == 1
    assert len(payload.curves[0].x) == plots.CURVE_POINTS


def test_unwritable_path(tmp_path: Path) -> None:
    payload = plots.BoxPayload("t", "x", ("a",), (np.arange(5.0),))
    with pytest.raises(OutputError):
        plots.render_plot(payload, os.path.join(str(tmp_path), "missing", "box.svg"))
