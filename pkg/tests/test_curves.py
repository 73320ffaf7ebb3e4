import math
from typing import Callable, Dict, Tuple

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from shapstats import curves
from shapstats.curves import FitFamily
from shapstats.errors import CurveFitError


def test_exact_line_prefers_linear() -> None:
    x = np.linspace(0.0, 10.0, 50)
    selection = curves.select_best_fit(x, 2.0 * x + 1.0, 0.05)
    assert selection.best is not None
    assert selection.best.family is FitFamily.LINEAR
    assert selection.best.degenerate
    assert selection.best.p_value_a == 0.0
    assert selection.best.coefficients["a"] == pytest.approx(2.0)
    assert selection.best.coefficients["b"] == pytest.approx(1.0)
    quadratic = selection.fits[FitFamily.QUADRATIC.order]
    assert not quadratic.significant(0.05)


def test_noisy_line_recovers_slope(rng: np.random.Generator) -> None:
    x = rng.uniform(-1.0, 1.0, 300)
    selection = curves.select_best_fit(x, 2.0 * x + rng.normal(0.0, 0.01, 300), 0.05)
    linear = selection.fits[FitFamily.LINEAR.order]
    assert linear in selection.significant_fits
    assert linear.a == pytest.approx(2.0, abs=0.01)
    assert selection.best is not None
    assert selection.best.rmse <= linear.rmse


def test_parabola_prefers_quadratic(rng: np.random.Generator) -> None:
    x = rng.uniform(-1.0, 1.0, 300)
    selection = curves.select_best_fit(x, x**2 + rng.normal(0.0, 0.02, 300), 0.05)
    assert selection.best is not None
    assert selection.best.family is FitFamily.QUADRATIC
    assert selection.best.a == pytest.approx(1.0, abs=0.05)


def test_steep_sigmoid_prefers_sigmoid(rng: np.random.Generator) -> None:
    x = rng.uniform(-4.0, 4.0, 300)
    y = 2.0 * special.expit(3.0 * x) - 1.0 + rng.normal(0.0, 0.05, 300)
    selection = curves.select_best_fit(x, y, 0.05)
    assert selection.best is not None
    assert selection.best.family is FitFamily.SIGMOID
    c = selection.best.coefficients
    assert c["L"] == pytest.approx(2.0, abs=0.1)
    assert c["a"] == pytest.approx(3.0, rel=0.2)
    assert c["x0"] == pytest.approx(0.0, abs=0.05)
    assert c["b"] == pytest.approx(-1.0, abs=0.1)


def test_falling_sigmoid_keeps_a_positive(rng: np.random.Generator) -> None:
    x = rng.uniform(0.0, 10.0, 300)
    y = -1.5 * special.expit(2.0 * (x - 5.0)) + rng.normal(0.0, 0.03, 300)
    fit = curves.fit_sigmoid(x, y)
    assert fit.converged
    assert fit.coefficients["a"] > 0
    assert fit.coefficients["L"] == pytest.approx(-1.5, abs=0.1)
    assert fit.coefficients["x0"] == pytest.approx(5.0, abs=0.1)
    assert curves.evaluate_fit(fit, [0.0, 10.0]) == pytest.approx([0.0, -1.5], abs=0.1)


def test_coefficients_are_on_the_raw_scale() -> None:
    x = np.linspace(100.0, 110.0, 21)
    fit = curves.fit_quadratic(x, 0.5 * (x - 105.0) ** 2)
    assert fit.coefficients["a"] == pytest.approx(0.5, rel=1e-6)
    assert fit.coefficients["b"] == pytest.approx(-105.0, rel=1e-6)
    assert fit.coefficients["c"] == pytest.approx(5512.5, rel=1e-6)
    assert curves.evaluate_fit(fit, [105.0]) == pytest.approx([0.0], abs=1e-6)


def test_flat_response() -> None:
    x = np.linspace(0.0, 1.0, 30)
    selection = curves.select_best_fit(x, np.full(30, 0.25), 0.05)
    assert selection.none_significant
    assert selection.best is None
    sigmoid = selection.fits[FitFamily.SIGMOID.order]
    assert not sigmoid.converged and sigmoid.degenerate
    linear = selection.fits[FitFamily.LINEAR.order]
    assert linear.p_value_a == 1.0
    assert linear.coefficients == {"a": 0.0, "b": 0.25}


def test_preconditions() -> None:
    with pytest.raises(CurveFitError):
        curves.fit_linear([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(CurveFitError):
        curves.fit_linear([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(CurveFitError):
        curves.fit_quadratic([0.0, 0.0, 1.0, 1.0], [1.0, 2.0, 3.0, 4.0])
    with pytest.raises(CurveFitError):
        curves.fit_sigmoid([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 3.0])

    fit = curves.try_fit_family(FitFamily.QUADRATIC, [0.0, 1.0, 2.0], [1.0, 0.0, 1.0])
    assert not fit.converged
    assert fit.p_value_a is None
    assert "at least 4 points" in fit.reason
    assert not fit.significant(0.05)


def test_linear_matches_the_normal_equations() -> None:
    fit = curves.fit_linear([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 4.0])
    assert fit.coefficients["a"] == pytest.approx(1.3, abs=1e-12)
    assert fit.coefficients["b"] == pytest.approx(-0.2, abs=1e-12)
    # residuals 0.2, -0.1, -0.4, 0.3 give SSE 0.3 on 2 degrees of freedom
    assert fit.rmse == pytest.approx(math.sqrt(0.3 / 4.0), rel=1e-12)
    assert fit.se_a == pytest.approx(math.sqrt(0.03), rel=1e-9)
    t = 1.3 / math.sqrt(0.03)
    assert fit.p_value_a == pytest.approx(2.0 * stats.t.sf(t, 2), rel=1e-9)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _noisy_data(seed: int, n: int = 40) -> Tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    x = rng.uniform(-5.0, 5.0, n)
    slope, bend = rng.normal(0.0, 1.0), rng.normal(0.0, 0.3)
    return x, slope * x + bend * x * x + rng.normal(0.0, 1.0, n)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_residuals_are_orthogonal_to_the_design(seed: int) -> None:
    x, y = _noisy_data(seed)
    ones = np.ones_like(x)
    for fit, columns in (
        (curves.fit_linear(x, y), [x, ones]),
        (curves.fit_quadratic(x, y), [x * x, x, ones]),
    ):
        residuals = y - curves.evaluate_fit(fit, x)
        for column in columns:
            bound = 1e-8 * np.linalg.norm(residuals) * np.linalg.norm(column)
            assert abs(float(residuals @ column)) <= bound


@settings(max_examples=40, deadline=None)
@given(
    seeds,
    st.floats(min_value=0.01, max_value=100.0),
    st.floats(min_value=-50.0, max_value=50.0),
    st.sampled_from([-1.0, 1.0]),
)
def test_fits_are_affine_equivariant_in_x(
    seed: int, scale: float, shift: float, sign: float
) -> None:
    x, y = _noisy_data(seed)
    alpha = sign * scale
    moved_x = alpha * x + shift
    line, moved_line = curves.fit_linear(x, y), curves.fit_linear(moved_x, y)
    assert moved_line.a * alpha == pytest.approx(line.a, rel=1e-9, abs=1e-12)
    assert moved_line.p_value_a == pytest.approx(line.p_value_a, abs=1e-9)
    parabola = curves.fit_quadratic(x, y)
    moved_parabola = curves.fit_quadratic(moved_x, y)
    assert moved_parabola.a * alpha**2 == pytest.approx(
        parabola.a, rel=1e-9, abs=1e-12
    )
    assert moved_parabola.p_value_a == pytest.approx(parabola.p_value_a, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    seeds,
    st.floats(min_value=0.01, max_value=100.0),
    st.floats(min_value=-50.0, max_value=50.0),
    st.sampled_from([-1.0, 1.0]),
)
def test_fits_are_affine_equivariant_in_y(
    seed: int, scale: float, shift: float, sign: float
) -> None:
    x, y = _noisy_data(seed)
    gamma = sign * scale
    for family in (FitFamily.LINEAR, FitFamily.QUADRATIC):
        base = curves.fit_family(family, x, y)
        moved = curves.fit_family(family, x, gamma * y + shift)
        assert moved.a == pytest.approx(gamma * base.a, rel=1e-9, abs=1e-12)
        assert moved.rmse == pytest.approx(scale * base.rmse, rel=1e-9)
        assert moved.p_value_a == pytest.approx(base.p_value_a, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_quadratic_never_fits_worse_than_linear(seed: int) -> None:
    x, y = _noisy_data(seed)
    assert curves.fit_quadratic(x, y).rmse <= curves.fit_linear(x, y).rmse + 1e-12


coefficient = st.floats(min_value=-5.0, max_value=5.0)


@settings(max_examples=40, deadline=None)
@given(coefficient, coefficient, coefficient)
def test_noiseless_polynomials_are_recovered(a: float, b: float, c: float) -> None:
    x = np.linspace(-3.0, 3.0, 25)
    line = curves.fit_linear(x, a * x + b)
    assert [line.coefficients["a"], line.coefficients["b"]] == pytest.approx(
        [a, b], abs=1e-6
    )
    parabola = curves.fit_quadratic(x, a * x * x + b * x + c)
    assert [parabola.coefficients[k] for k in "abc"] == pytest.approx(
        [a, b, c], abs=1e-6
    )


@pytest.mark.parametrize(
    "params", [(2.0, 3.0, 0.0, -1.0), (-1.5, 2.0, 0.5, 0.25), (1.0, 1.0, -1.0, 3.0)]
)
def test_noiseless_sigmoid_is_recovered(
    params: Tuple[float, float, float, float]
) -> None:
    x = np.linspace(-3.0, 3.0, 61)
    fit = curves.fit_sigmoid(x, curves.sigmoid(params, x))
    assert fit.converged
    recovered = [fit.coefficients[k] for k in ("L", "a", "x0", "b")]
    assert recovered == pytest.approx(list(params), abs=1e-6)
    assert fit.rmse < 1e-8


nonzero = st.floats(min_value=-3.0, max_value=3.0).filter(lambda v: abs(v) > 0.1)
offset = st.floats(min_value=-2.0, max_value=2.0)


@settings(max_examples=50, deadline=None)
@given(nonzero, st.floats(min_value=-4.0, max_value=4.0), offset, offset)
def test_sigmoid_jacobian_matches_finite_differences(
    big_l: float, a: float, x0: float, b: float
) -> None:
    x = np.linspace(-3.0, 3.0, 25)
    params = np.array([big_l, a, x0, b])
    analytic = curves.sigmoid_jacobian(params, x)
    h = 1e-6
    for j in range(4):
        step = np.zeros(4)
        step[j] = h
        numeric = (
            curves.sigmoid(params + step, x) - curves.sigmoid(params - step, x)
        ) / (2.0 * h)
        assert numeric == pytest.approx(analytic[:, j], rel=1e-4, abs=1e-6)


@pytest.mark.parametrize("family", list(FitFamily))
def test_sign_flip_keeps_rmse(family: FitFamily, rng: np.random.Generator) -> None:
    x = rng.uniform(-3.0, 3.0, 200)
    y = 2.0 * special.expit(2.0 * (x - 0.5)) - 1.0 + rng.normal(0.0, 0.05, 200)
    up = curves.fit_family(family, x, y)
    down = curves.fit_family(family, x, -y)
    assert up.converged and down.converged
    assert down.rmse == pytest.approx(up.rmse, abs=1e-8)


def test_line_disguised_as_sigmoid_is_rejected(rng: np.random.Generator) -> None:
    x = rng.uniform(-3.0, 3.0, 500)
    y = 2.0 * x + rng.normal(0.0, 0.6, 500)
    sigmoid = curves.fit_sigmoid(x, y)
    height = abs(sigmoid.coefficients["L"])
    assert not sigmoid.converged or height <= curves.SIGMOID_SPAN * np.ptp(y)
    selection = curves.select_best_fit(x, y, 0.05)
    assert selection.best is not None
    assert selection.best.family is FitFamily.LINEAR


def test_sigmoid_midpoint_must_lie_in_the_data() -> None:
    x = np.linspace(0.0, 4.0, 80)
    # only the upper half of a curve centred at -0.5 is observed
    fit = curves.fit_sigmoid(x, curves.sigmoid((2.0, 1.5, -0.5, 0.0), x))
    assert not fit.converged
    assert fit.p_value_a is None
    assert "outside the observed x range" in fit.reason


def test_schwarz_criterion_charges_for_coefficients() -> None:
    x = np.linspace(-1.0, 1.0, 50)
    y = x + 0.01 * np.sin(40.0 * x)
    line, parabola = curves.fit_linear(x, y), curves.fit_quadratic(x, y)
    assert parabola.rmse <= line.rmse
    gain = curves.schwarz_criterion(parabola) - curves.schwarz_criterion(line)
    expected = 50.0 * math.log(parabola.rmse**2 / line.rmse**2) + math.log(50.0)
    assert gain == pytest.approx(expected)


GENERATORS: Dict[FitFamily, Callable[[np.ndarray], np.ndarray]] = {
    FitFamily.LINEAR: lambda x: 1.5 * x + 0.5,
    FitFamily.QUADRATIC: lambda x: x * x - 3.0,
    FitFamily.SIGMOID: lambda x: 2.0 * special.expit(2.0 * (x - 0.5)) - 1.0,
}


@pytest.mark.slow
@pytest.mark.parametrize("family", list(FitFamily))
def test_generating_family_is_recovered(family: FitFamily) -> None:
    # noise is 5% of the signal's range; 95 of 100 draws must pick the family
    rng = np.random.default_rng(2024)
    hits = 0
    for _ in range(100):
        x = rng.uniform(-3.0, 3.0, 500)
        signal = GENERATORS[family](x)
        y = signal + rng.normal(0.0, 0.05 * np.ptp(signal), 500)
        best = curves.select_best_fit(x, y, 0.05).best
        hits += best is not None and best.family is family
    assert hits >= 95


@pytest.mark.slow
def test_noise_is_rarely_significant() -> None:
    rng = np.random.default_rng(31)
    none = sum(
        curves.select_best_fit(
            rng.uniform(-3.0, 3.0, 500), rng.normal(0.0, 1.0, 500), 0.05
        ).none_significant
        for _ in range(100)
    )
    assert none >= 85
